#!/usr/bin/env python
"""
Summarize the loss CSVs written by fit2d / fit3d.
Run this script after one or more fits to compare how they converged.

Usage:
    python analyze_fit.py loss.csv [other_loss.csv ...] [--window 100]
"""

import sys

import pandas as pd

COLUMNS = ["iteration", "recon", "prim", "weight_reg", "total", "eta"]


def parse_loss_csv(path):
    """Load one loss history, rejecting files without the expected columns"""
    frame = pd.read_csv(path, float_precision="round_trip")
    missing = [column for column in COLUMNS if column not in frame.columns]
    if missing:
        raise ValueError(f"{path}: missing columns {missing}")
    return frame


def analyze_fit(frame, window):
    """Best loss, where it happened, and the minimum of each window of iterations"""
    if frame.empty:
        return {'iterations': 0}

    best = frame.loc[frame['total'].idxmin()]
    minima = frame.groupby(frame['iteration'] // window)['total'].min()
    decreasing = bool((minima.diff().dropna() <= 0).all())
    return {
        'iterations': len(frame),
        'first_total': float(frame['total'].iloc[0]),
        'final_total': float(frame['total'].iloc[-1]),
        'best_total': float(best['total']),
        'best_iteration': int(best['iteration']),
        'best_terms': {term: float(best[term]) for term in ('recon', 'prim', 'weight_reg')},
        'final_eta': float(frame['eta'].iloc[-1]),
        'window_minima': minima.tolist(),
        'windows_decreasing': decreasing,
    }


def print_results(path, results, window):
    print(f"\n========== {path} ==========")
    if not results['iterations']:
        print("No iterations recorded")
        return
    print(f"Iterations: {results['iterations']}")
    print(f"Total loss: {results['first_total']:.6e} -> {results['final_total']:.6e}")
    print(f"Best: {results['best_total']:.6e} at iteration {results['best_iteration']}")
    terms = results['best_terms']
    print(f"  recon {terms['recon']:.3e} | prim {terms['prim']:.3e} | weight_reg {terms['weight_reg']:.3e}")
    print(f"Final eta: {results['final_eta']:g}")

    print(f"\nMinimum per {window} iterations:")
    for index, value in enumerate(results['window_minima']):
        print(f"  {index * window:>6}: {value:.6e}")
    if not results['windows_decreasing']:
        print("WARNING: window minima are not monotonically decreasing")


def main():
    args = sys.argv[1:]
    window = 100
    if "--window" in args:
        index = args.index("--window")
        window = int(args[index + 1])
        del args[index:index + 2]
    if not args:
        print("Usage: python analyze_fit.py <loss.csv> [more.csv ...] [--window N]")
        return 2

    for path in args:
        try:
            frame = parse_loss_csv(path)
        except (OSError, ValueError) as e:
            print(f"Error reading {path}: {e}")
            continue
        print_results(path, analyze_fit(frame, window), window)
    return 0


if __name__ == "__main__":
    sys.exit(main())
