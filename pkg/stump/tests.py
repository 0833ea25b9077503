import itertools
import math

import numpy as np
import torch
from django.test import SimpleTestCase

from extrude.pose import RigidPose
from extrude.solid import ExtrusionParams
from extrude_cad.exceptions import InvalidParameterError
from sketch.rbezier import circle_sketch, polygon_sketch
from .assembly import ShapeModel, model_occupancy, primitive_matrix
from .csg import (
    Difference,
    Empty,
    Intersection,
    Primitive,
    Union,
    Universe,
    describe,
    evaluate_csg,
    extract_csg,
    primitives_used,
)
from .layers import StumpMode, StumpParams, binarize, evaluate


def random_hard_stump(rng: np.random.Generator, k: int, j: int) -> StumpParams:
    return StumpParams(
        rng.integers(0, 2, k).astype(float),
        rng.integers(0, 2, (k, j)).astype(float),
        rng.integers(0, 2, j).astype(float),
        StumpMode.HARD,
    )


def boolean_oracle(stump: StumpParams, assignment) -> bool:
    """Direct reading of the stump as a disjunction of conjunctions"""
    c = stump.complement.numpy() > 0.5
    s = stump.inter_select.numpy() > 0.5
    u = stump.union_select.numpy() > 0.5
    for j in range(stump.n_nodes):
        selected = [k for k in range(stump.n_primitives) if s[k, j]]
        if u[j] and selected and all(bool(assignment[k]) != c[k] for k in selected):
            return True
    return False


class EvaluateTests(SimpleTestCase):
    def test_complemented_intersection(self):
        stump = StumpParams([0.0, 1.0], [[1.0], [1.0]], [1.0], StumpMode.HARD)
        self.assertEqual(float(evaluate(stump, [[1.0, 0.0]])[0]), 1.0)
        self.assertEqual(float(evaluate(stump, [[1.0, 1.0]])[0]), 0.0)

    def test_empty_union(self):
        rng = np.random.default_rng(0)
        stump = StumpParams(rng.random(3), rng.random((3, 4)), np.zeros(4))
        occupancies = torch.as_tensor(rng.random((50, 3)))
        self.assertTrue(torch.all(evaluate(stump, occupancies) == 0))

    def test_hard_empty_node_is_empty(self):
        stump = StumpParams([0.0], [[0.0, 1.0]], [1.0, 0.0], StumpMode.HARD)
        self.assertEqual(float(evaluate(stump, [[1.0]])[0]), 0.0)

    def test_matches_boolean_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            k, j = int(rng.integers(1, 9)), int(rng.integers(1, 9))
            stump = random_hard_stump(rng, k, j)
            assignments = np.array(list(itertools.product([0.0, 1.0], repeat=k)))
            expected = np.array([boolean_oracle(stump, a) for a in assignments])
            got = evaluate(stump, assignments).numpy() > 0.5
            self.assertTrue(np.array_equal(got, expected))
            self.assertTrue(np.array_equal(evaluate_csg(extract_csg(stump), assignments), expected))

    def test_soft_equals_hard_on_binary_inputs(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            k, j = int(rng.integers(1, 7)), int(rng.integers(1, 7))
            stump = random_hard_stump(rng, k, j)
            # Give every node at least one primitive
            select = stump.inter_select.clone()
            select[torch.as_tensor(rng.integers(0, k, j)), torch.arange(j)] = 1.0
            hard = StumpParams(stump.complement, select, stump.union_select, StumpMode.HARD)
            soft = StumpParams(stump.complement, select, stump.union_select, StumpMode.SOFT)
            assignments = np.array(list(itertools.product([0.0, 1.0], repeat=k)))
            self.assertTrue(torch.equal(evaluate(hard, assignments), evaluate(soft, assignments)))

    def test_monotone_in_union_weights(self):
        rng = np.random.default_rng(3)
        base = StumpParams(rng.random(4), rng.random((4, 3)), rng.random(3))
        occupancies = torch.as_tensor(rng.random((200, 4)))
        reference = evaluate(base, occupancies)
        for j in range(3):
            raised = base.union_select.clone()
            raised[j] = min(1.0, float(raised[j]) + 0.3)
            bigger = evaluate(StumpParams(base.complement, base.inter_select, raised), occupancies)
            self.assertTrue(torch.all(bigger >= reference))

    def test_output_stays_in_unit_interval(self):
        rng = np.random.default_rng(4)
        stump = StumpParams.from_unconstrained(rng.normal(size=5), rng.normal(size=(5, 6)), rng.normal(size=6))
        values = evaluate(stump, torch.as_tensor(rng.random((100, 5))))
        self.assertTrue(torch.all((values >= 0) & (values <= 1)))

    def test_dimension_mismatch(self):
        stump = StumpParams([0.0, 0.0], [[1.0], [1.0]], [1.0])
        with self.assertRaises(InvalidParameterError):
            evaluate(stump, np.zeros((4, 3)))

    def test_rejects_out_of_range_entries(self):
        with self.assertRaises(InvalidParameterError):
            StumpParams([1.5], [[1.0]], [1.0])
        with self.assertRaises(InvalidParameterError):
            StumpParams([0.5], [[1.0]], [1.0], StumpMode.HARD)
        with self.assertRaises(InvalidParameterError):
            StumpParams([0.5, 0.5], [[1.0]], [1.0])

    def test_gradient_flows_to_all_layers(self):
        raw = [torch.zeros(2, dtype=torch.float64, requires_grad=True),
               torch.zeros(2, 2, dtype=torch.float64, requires_grad=True),
               torch.zeros(2, dtype=torch.float64, requires_grad=True)]
        stump = StumpParams.from_unconstrained(*raw)
        evaluate(stump, [[0.9, 0.2], [0.1, 0.7]]).sum().backward()
        for tensor in raw:
            self.assertIsNotNone(tensor.grad)
            self.assertGreater(float(tensor.grad.abs().sum()), 0.0)


class BinarizeTests(SimpleTestCase):
    def test_threshold_is_inclusive(self):
        stump = binarize(StumpParams([0.5], [[0.49]], [0.51]), 0.5)
        self.assertEqual(stump.mode, StumpMode.HARD)
        self.assertEqual(stump.complement.tolist(), [1.0])
        self.assertEqual(stump.inter_select.tolist(), [[0.0]])
        self.assertEqual(stump.union_select.tolist(), [1.0])

    def test_all_high_entries(self):
        stump = binarize(StumpParams(np.full(3, 0.9), np.full((3, 2), 0.9), np.full(2, 0.9)))
        self.assertTrue(torch.all(stump.inter_select == 1))

    def test_rejects_threshold_outside_unit_interval(self):
        stump = StumpParams([0.3], [[0.3]], [0.3])
        for threshold in (0.0, 1.0, -0.2, 1.5):
            with self.assertRaises(InvalidParameterError):
                binarize(stump, threshold)

    def test_dict_document(self):
        stump = StumpParams.from_unconstrained([0.3, -1.0], [[0.1, 2.0, -0.4], [1.0, 0.0, 0.5]], [0.2, 0.1, -3.0])
        restored = StumpParams.from_dict(stump.to_dict())
        self.assertTrue(torch.equal(restored.inter_select, stump.inter_select))
        self.assertEqual(restored.mode, StumpMode.SOFT)


class ExtractCsgTests(SimpleTestCase):
    def test_single_primitive(self):
        stump = StumpParams([0.0], [[1.0]], [1.0], StumpMode.HARD)
        self.assertEqual(extract_csg(stump), Primitive(0))

    def test_difference(self):
        stump = StumpParams([0.0, 1.0], [[1.0], [1.0]], [1.0], StumpMode.HARD)
        self.assertEqual(extract_csg(stump), Difference(Primitive(0), Primitive(1)))
        self.assertEqual(describe(extract_csg(stump)), "P0 - P1")

    def test_empty_active_set(self):
        stump = StumpParams([0.0, 0.0], [[1.0, 0.0], [0.0, 0.0]], [0.0, 1.0], StumpMode.HARD)
        self.assertEqual(extract_csg(stump), Empty())

    def test_complement_only_node(self):
        stump = StumpParams([1.0], [[1.0]], [1.0], StumpMode.HARD)
        tree = extract_csg(stump)
        self.assertEqual(tree, Difference(Universe(), Primitive(0)))
        self.assertEqual(evaluate_csg(tree, [[0.0], [1.0]]).tolist(), [True, False])

    def test_union_of_intersections(self):
        stump = StumpParams([0.0, 0.0, 0.0], [[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]], [1.0, 1.0], StumpMode.HARD)
        tree = extract_csg(stump)
        self.assertEqual(tree, Union((Intersection((Primitive(0), Primitive(1))), Primitive(2))))
        self.assertEqual(primitives_used(tree), (0, 1, 2))

    def test_needs_hard_stump(self):
        with self.assertRaises(InvalidParameterError):
            extract_csg(StumpParams([0.2], [[0.7]], [0.9]))


def box_and_cylinder_model() -> ShapeModel:
    box = ExtrusionParams(polygon_sketch([math.sqrt(2.0)] * 4, math.pi / 4), RigidPose.identity(), 1.0)
    rod = ExtrusionParams(circle_sketch(4, 0.4), RigidPose([1, 0, 0, 0], [0.0, 0.0, -0.5]), 2.0)
    # Box minus rod
    stump = StumpParams([0.0, 1.0], [[1.0], [1.0]], [1.0], StumpMode.HARD)
    return ShapeModel((box, rod), stump, 100.0, {"bbox_lower": [-1, -1, -0.5], "bbox_upper": [1, 1, 1.5]})


class ShapeModelTests(SimpleTestCase):
    def test_hard_occupancy_matches_csg_tree(self):
        model = box_and_cylinder_model()
        points = np.random.default_rng(5).uniform(-1.2, 1.6, (500, 3))
        binary = primitive_matrix(model, points, hard=True, samples_per_curve=40).numpy()
        tree = model.csg()
        occupancy = model_occupancy(model, points, samples_per_curve=40).numpy() > 0.5
        self.assertTrue(np.array_equal(occupancy, evaluate_csg(tree, binary)))

    def test_known_points(self):
        model = box_and_cylinder_model()
        values = model_occupancy(model, [[0.8, 0.8, 0.5], [0.0, 0.0, 0.5], [0.8, 0.8, 1.2]], samples_per_curve=40)
        self.assertEqual(values.tolist(), [1.0, 0.0, 0.0])

    def test_soft_model_hard_evaluation(self):
        model = box_and_cylinder_model()
        soft = ShapeModel(model.primitives, StumpParams([0.2, 0.8], [[0.9], [0.7]], [0.95]), 100.0)
        points = np.random.default_rng(6).uniform(-1.2, 1.6, (200, 3))
        hard_values = model_occupancy(soft, points, hard=True, samples_per_curve=40)
        self.assertTrue(torch.equal(hard_values, model_occupancy(model, points, samples_per_curve=40)))

    def test_dict_document(self):
        model = box_and_cylinder_model()
        restored = ShapeModel.from_dict(model.to_dict())
        self.assertEqual(restored.to_dict(), model.to_dict())
        bbox = restored.bbox()
        self.assertTrue(np.array_equal(bbox[0], [-1, -1, -0.5]))

    def test_primitive_count_must_match(self):
        model = box_and_cylinder_model()
        with self.assertRaises(InvalidParameterError):
            ShapeModel(model.primitives[:1], model.stump, 100.0)
