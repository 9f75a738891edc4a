import time
import unittest

import numpy as np
import pytest

from autograd.tensor import Tensor, no_grad
from errors import DimensionError, InputError
from graph import build_adjacency, cheb_filter, normalized_laplacian
from layers import GraphConvLayer, LayerNormParams, StConvBlock, StgcnModel, TemporalConvLayer
from layers.gradcheck import random_bundle, run_layer_gradchecks
from layers.init import fan_limit
from layers.model import closed_form_parameter_count


def bundle_for(n: int, seed: int = 0):
    return random_bundle(n, np.random.default_rng(seed))


class TestGraphConv(unittest.TestCase):
    def test_k1_identity_kernel_passes_input_through(self):
        bundle = bundle_for(5)
        layer = GraphConvLayer(bundle, 3, 3, 'cheb', k=1)
        layer.load_state({'theta': np.eye(3)[np.newaxis], 'bias': np.zeros(3)})
        x = np.random.default_rng(1).normal(size=(4, 5, 3))
        np.testing.assert_allclose(layer(x).data, x, atol=1e-15)

    def test_single_channel_matches_chebyshev_filter(self):
        bundle = bundle_for(6, seed=2)
        theta = np.array([0.4, -0.3, 0.2, 0.1])
        layer = GraphConvLayer(bundle, 1, 1, 'cheb', k=4)
        layer.load_state({'theta': theta.reshape(4, 1, 1), 'bias': np.zeros(1)})
        x = np.random.default_rng(3).normal(size=(2, 6, 1))
        out = layer(x).data
        for t in range(2):
            np.testing.assert_allclose(out[t, :, 0], cheb_filter(bundle, theta, x[t, :, 0]), atol=1e-12)

    def test_first_order_forces_single_term(self):
        bundle = bundle_for(4)
        layer = GraphConvLayer(bundle, 2, 3, 'first_order', k=3)
        self.assertEqual(layer.theta.shape, (1, 2, 3))
        layer.load_state({'theta': np.ones((1, 2, 3)), 'bias': np.zeros(3)})
        x = np.random.default_rng(4).normal(size=(1, 4, 2))
        expected = (bundle.propagation.toarray() @ x[0]) @ np.ones((2, 3))
        np.testing.assert_allclose(layer(x).data[0], expected, atol=1e-12)

    def test_node_count_mismatch(self):
        layer = GraphConvLayer(bundle_for(4), 1, 2)
        with self.assertRaises(DimensionError):
            layer(np.zeros((3, 5, 1)))

    def test_unknown_variant(self):
        with self.assertRaises(InputError):
            GraphConvLayer(bundle_for(3), 1, 1, 'spline')


class TestTemporalConv(unittest.TestCase):
    def test_zero_kernel_halves_identity_residual(self):
        layer = TemporalConvLayer(2, 2, kt=3)
        layer.load_state({'kernel': np.zeros((3, 2, 4)), 'bias': np.zeros(4)})
        x = np.random.default_rng(0).normal(size=(1, 7, 4, 2))
        np.testing.assert_allclose(layer(x).data, 0.5 * x[:, 2:], atol=1e-15)

    def test_output_length_and_projection(self):
        layer = TemporalConvLayer(1, 4, kt=3)
        self.assertIsNotNone(layer.projection)
        out = layer(np.zeros((2, 12, 5, 1)))
        self.assertEqual(out.shape, (2, 10, 5, 4))
        self.assertEqual(layer.output_length(12), 10)

    def test_gate_bounds_output_by_linear_path(self):
        rng = np.random.default_rng(5)
        layer = TemporalConvLayer(3, 3, kt=2, rng=rng)
        state = layer.state_dict()
        x = rng.normal(size=(2, 6, 4, 3))
        out = layer(x).data
        windows = np.concatenate([x[:, :-1], x[:, 1:]], axis=-1)
        pq = windows @ state['kernel'].reshape(6, 6) + state['bias']
        linear = pq[..., :3] + x[:, 1:]
        self.assertTrue(np.all(np.abs(out) <= np.abs(linear) + 1e-15))

    def test_causal_locality(self):
        rng = np.random.default_rng(6)
        layer = TemporalConvLayer(1, 2, kt=3, rng=rng)
        x = rng.normal(size=(1, 9, 3, 1))
        base = layer(x).data
        bumped = x.copy()
        bumped[0, 4] += 1.0
        diff = np.abs(layer(bumped).data - base).max(axis=(0, 2, 3))
        # output frame t sees input frames t .. t + 2
        self.assertTrue(np.all(diff[[0, 1, 5, 6]] == 0.0))
        self.assertTrue(np.all(diff[[2, 3, 4]] > 0.0))

    def test_short_sequence_is_dimension_error(self):
        layer = TemporalConvLayer(1, 1, kt=3)
        with self.assertRaises(DimensionError) as ctx:
            layer(np.zeros((2, 4, 1)))
        self.assertIn('K_t=3', str(ctx.exception))


class TestBlockAndNorm(unittest.TestCase):
    def test_layer_norm_initial_output_standardized(self):
        norm = LayerNormParams(4, 3)
        out = norm(np.random.default_rng(0).normal(size=(2, 5, 4, 3))).data
        np.testing.assert_allclose(out.mean(axis=(-2, -1)), 0.0, atol=1e-12)
        np.testing.assert_allclose(out.var(axis=(-2, -1)), 1.0, atol=1e-3)

    def test_block_shapes(self):
        block = StConvBlock(bundle_for(5), (1, 16, 64), kt=3)
        out = block(np.zeros((2, 12, 5, 1)))
        self.assertEqual(out.shape, (2, 8, 5, 64))

    def test_block_rejects_short_history(self):
        block = StConvBlock(bundle_for(3), (1, 2, 4), kt=3)
        with self.assertRaises(DimensionError):
            block(np.zeros((1, 4, 3, 1)))


class TestModel(unittest.TestCase):
    def test_shape_contract_with_default_channels(self):
        bundle = bundle_for(6)
        model = StgcnModel(bundle, history=12, channels=((1, 16, 64), (64, 16, 64)), kt=3)
        self.assertEqual(model.frame_lengths(), [8, 4, 1])
        with no_grad():
            self.assertEqual(model(np.zeros((12, 6, 1))).shape, (6, 1))
            self.assertEqual(model(np.zeros((3, 12, 6, 1))).shape, (3, 6, 1))

    def test_parameter_count_matches_closed_form(self):
        channels = ((1, 16, 64), (64, 16, 64))
        for variant, k in (('cheb', 3), ('first_order', 1)):
            model = StgcnModel(bundle_for(7), history=12, channels=channels, kt=3, variant=variant, k=k)
            self.assertEqual(model.parameter_count(), closed_form_parameter_count(channels, 7, 3, k, 12))

    def test_parameter_shapes_listing(self):
        model = StgcnModel(bundle_for(3), history=8, channels=((1, 2, 3),), kt=2, k=2)
        lines = model.parameter_shapes()
        self.assertIn('block0.spatial.theta: (2, 3, 2)', lines)
        self.assertIn('head.w: (3, 1)', lines)

    def test_invalid_configurations(self):
        bundle = bundle_for(3)
        with self.assertRaises(InputError):
            StgcnModel(bundle, channels=((2, 4, 8),))
        with self.assertRaises(InputError):
            StgcnModel(bundle, channels=((1, 4, 8), (16, 4, 8)))
        with self.assertRaises(DimensionError):
            StgcnModel(bundle, history=8, channels=((1, 4, 8), (8, 4, 8)), kt=3)
        model = StgcnModel(bundle, history=12)
        with self.assertRaises(DimensionError):
            model(np.zeros((10, 3, 1)))

    def test_same_seed_same_parameters(self):
        a = StgcnModel(bundle_for(4), history=12, channels=((1, 4, 8), (8, 4, 8)), seed=3).state_dict()
        b = StgcnModel(bundle_for(4), history=12, channels=((1, 4, 8), (8, 4, 8)), seed=3).state_dict()
        self.assertEqual(list(a), list(b))
        for name in a:
            self.assertEqual(a[name].tobytes(), b[name].tobytes())

    def test_load_state_validation(self):
        model = StgcnModel(bundle_for(3), history=8, channels=((1, 2, 3),), kt=2)
        state = model.state_dict()
        with self.assertRaises(InputError):
            model.load_state({k: v for k, v in state.items() if k != 'head.b'})
        with self.assertRaises(InputError):
            model.load_state({**state, 'extra': np.zeros(1)})
        with self.assertRaises(DimensionError):
            model.load_state({**state, 'head.w': np.zeros((4, 1))})


def test_model_is_permutation_equivariant():
    rng = np.random.default_rng(12)
    n = 6
    points = rng.uniform(0.0, 3.0, size=(n, 2))
    distances = [(i, j, float(np.linalg.norm(points[i] - points[j]))) for i in range(n) for j in range(i + 1, n)]
    graph = build_adjacency(distances, n)
    perm = rng.permutation(n)
    bundle = normalized_laplacian(graph)
    permuted_bundle = normalized_laplacian(graph.permuted(perm))
    channels = ((1, 4, 6), (6, 4, 6))
    model = StgcnModel(bundle, history=12, channels=channels, kt=3, k=3, seed=1)
    state = {name: value + rng.normal(0.0, 0.1, size=value.shape) for name, value in model.state_dict().items()}
    model.load_state(state)
    twin = StgcnModel(permuted_bundle, history=12, channels=channels, kt=3, k=3, seed=1)
    twin.load_state({name: value[perm] if '.norm.' in name else value for name, value in state.items()})
    x = rng.normal(size=(3, 12, n, 1))
    with no_grad():
        out = model(Tensor(x)).data
        out_perm = twin(Tensor(x[:, :, perm])).data
    assert np.max(np.abs(out_perm - out[:, perm])) < 1e-10


def test_fan_limit():
    assert fan_limit((3, 2, 4)) == pytest.approx(np.sqrt(6.0 / (6 + 4)))


def test_every_layer_passes_gradient_check():
    start = time.perf_counter()
    results = run_layer_gradchecks(seed=0)
    names = [name for name, _ in results]
    for expected in ('graph_conv_cheb', 'graph_conv_first_order', 'temporal_conv', 'layer_norm', 'st_block', 'output_head', 'model'):
        assert expected in names
    failed = {name: r.max_relative_error for name, r in results if not r.passed}
    assert not failed, failed
    assert time.perf_counter() - start < 60.0


if __name__ == '__main__':
    unittest.main()
