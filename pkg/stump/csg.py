"""CSG expression trees read off a hard stump."""
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union as TypingUnion

import numpy as np

from extrude_cad.exceptions import InvalidParameterError
from sketch.tensors import to_numpy
from .layers import StumpParams


@dataclass(frozen=True)
class Primitive:
    index: int


@dataclass(frozen=True)
class Union:
    children: Tuple["CsgNode", ...]


@dataclass(frozen=True)
class Intersection:
    children: Tuple["CsgNode", ...]


@dataclass(frozen=True)
class Difference:
    base: "CsgNode"
    subtracted: "CsgNode"


@dataclass(frozen=True)
class Universe:
    """All of space; only appears as the base of a node whose primitives are all complemented"""


@dataclass(frozen=True)
class Empty:
    pass


CsgNode = TypingUnion[Primitive, Union, Intersection, Difference, Universe, Empty]


def _combine(kind, indices: Sequence[int]) -> "CsgNode":
    nodes = tuple(Primitive(int(k)) for k in indices)
    return nodes[0] if len(nodes) == 1 else kind(nodes)


def extract_csg(stump: StumpParams, prims: Optional[Sequence] = None) -> CsgNode:
    """Union over active nodes of (intersection of plain primitives) minus (union of complemented ones)"""
    if not stump.is_hard:
        raise InvalidParameterError("CSG extraction needs a hard stump; binarize it first")
    if prims is not None and len(prims) != stump.n_primitives:
        raise InvalidParameterError(f"Stump has {stump.n_primitives} primitives, got {len(prims)}")

    complement = to_numpy(stump.complement) > 0.5
    select = to_numpy(stump.inter_select) > 0.5
    union = to_numpy(stump.union_select) > 0.5

    terms = []
    for j in np.nonzero(union)[0]:
        selected = np.nonzero(select[:, j])[0]
        if len(selected) == 0:
            continue
        plain = [k for k in selected if not complement[k]]
        negated = [k for k in selected if complement[k]]
        base = _combine(Intersection, plain) if plain else Universe()
        terms.append(Difference(base, _combine(Union, negated)) if negated else base)

    if not terms:
        return Empty()
    return terms[0] if len(terms) == 1 else Union(tuple(terms))


def evaluate_csg(node: CsgNode, occupancies, universe=None) -> np.ndarray:
    """
    Boolean membership (Q,) of every point given binary primitive occupancies (Q, K).

    `universe` is an optional (Q,) mask standing in for all of space, e.g. the export bbox.
    """
    occupancies = np.asarray(occupancies) > 0.5
    q = occupancies.shape[0]
    if universe is not None:
        universe = np.asarray(universe, dtype=bool).reshape(-1)
    if isinstance(node, Primitive):
        return occupancies[:, node.index].copy()
    if isinstance(node, Union):
        return np.logical_or.reduce([evaluate_csg(child, occupancies, universe) for child in node.children])
    if isinstance(node, Intersection):
        return np.logical_and.reduce([evaluate_csg(child, occupancies, universe) for child in node.children])
    if isinstance(node, Difference):
        return evaluate_csg(node.base, occupancies, universe) & ~evaluate_csg(node.subtracted, occupancies, universe)
    if isinstance(node, Universe):
        return np.ones(q, dtype=bool) if universe is None else universe.copy()
    if isinstance(node, Empty):
        return np.zeros(q, dtype=bool)
    raise InvalidParameterError(f"Not a CSG node: {type(node).__name__}")


def describe(node: CsgNode) -> str:
    """Compact infix form, e.g. ((P0 & P2) - P1) | P3"""
    if isinstance(node, Primitive):
        return f"P{node.index}"
    if isinstance(node, Union):
        return " | ".join(_wrap(child) for child in node.children)
    if isinstance(node, Intersection):
        return " & ".join(_wrap(child) for child in node.children)
    if isinstance(node, Difference):
        return f"{_wrap(node.base)} - {_wrap(node.subtracted)}"
    if isinstance(node, Universe):
        return "ALL"
    return "EMPTY"


def _wrap(node: CsgNode) -> str:
    text = describe(node)
    return f"({text})" if isinstance(node, (Union, Intersection, Difference)) else text


def primitives_used(node: CsgNode) -> Tuple[int, ...]:
    """Sorted indices of the primitives a tree refers to"""
    if isinstance(node, Primitive):
        return (node.index,)
    if isinstance(node, (Union, Intersection)):
        return tuple(sorted({k for child in node.children for k in primitives_used(child)}))
    if isinstance(node, Difference):
        return tuple(sorted(set(primitives_used(node.base)) | set(primitives_used(node.subtracted))))
    return ()
