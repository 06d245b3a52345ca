import numpy as np
import pytest

from pymodaq_plugins_hypermaml.autodiff import (PUBLIC_KINDS, Tape, Tensor, apply_primitive, backward,
                                                finite_diff_grad, relative_error)
from pymodaq_plugins_hypermaml.autodiff import functional as F
from pymodaq_plugins_hypermaml.errors import GradientError, NestingError, NonFiniteError, ShapeError

F64 = np.float64


def away_from_zero(rng, shape, low=0.1):
    return rng.uniform(low, 1.0, size=shape) * rng.choice([-1.0, 1.0], size=shape)


def distinct(rng, shape):
    """Values whose pairwise gaps are far larger than the finite-difference step."""
    return (rng.permutation(int(np.prod(shape))).reshape(shape) * 0.05 - 1.0).astype(F64)


# kind -> (inputs builder, function of the input dict)
CASES = {
    'add': (lambda rng: {'a': rng.normal(size=(3, 4)), 'b': rng.normal(size=(4,))},
            lambda p: F.add(p['a'], p['b'])),
    'mul': (lambda rng: {'a': rng.normal(size=(3, 4)), 'b': rng.normal(size=(3, 1))},
            lambda p: F.mul(p['a'], p['b'])),
    'scale': (lambda rng: {'x': rng.normal(size=(5,))},
              lambda p: F.scale(p['x'], -2.5)),
    'pow': (lambda rng: {'x': rng.uniform(0.5, 2.0, size=(4,))},
            lambda p: F.pow(p['x'], -1.5)),
    'matmul': (lambda rng: {'a': rng.normal(size=(3, 4)), 'b': rng.normal(size=(4, 2))},
               lambda p: F.matmul(p['a'], p['b'])),
    'transpose': (lambda rng: {'x': rng.normal(size=(2, 3))},
                  lambda p: F.transpose(p['x'])),
    'reshape': (lambda rng: {'x': rng.normal(size=(2, 6))},
                lambda p: F.reshape(p['x'], (3, -1))),
    'relu': (lambda rng: {'x': away_from_zero(rng, (4, 5))},
             lambda p: F.relu(p['x'])),
    'softmax': (lambda rng: {'x': rng.normal(size=(3, 4))},
                lambda p: F.softmax(p['x'])),
    'softmax_xent': (lambda rng: {'x': rng.normal(size=(6, 4))},
                     lambda p: F.softmax_xent(p['x'], [0, 3, 1, 1, 2, 0])),
    'concat_last_axis': (lambda rng: {'a': rng.normal(size=(3, 2)), 'b': rng.normal(size=(3, 4))},
                         lambda p: F.concat_last_axis(p['a'], p['b'])),
    'mean_rows': (lambda rng: {'x': rng.normal(size=(5, 3))},
                  lambda p: F.mean_rows(p['x'], [0, 1, 0, 2, 1], 3)),
    'conv2d': (lambda rng: {'x': rng.normal(size=(2, 2, 5, 5)), 'w': rng.normal(size=(3, 2, 3, 3))},
               lambda p: F.conv2d(p['x'], p['w'], stride=1, padding=1)),
    'conv2d_strided': (lambda rng: {'x': rng.normal(size=(1, 2, 6, 5)), 'w': rng.normal(size=(2, 2, 3, 3))},
                       lambda p: F.conv2d(p['x'], p['w'], stride=2, padding=0)),
    'maxpool2x2': (lambda rng: {'x': distinct(rng, (2, 2, 4, 5))},
                   lambda p: F.maxpool2x2(p['x'])),
    'global_avg_pool': (lambda rng: {'x': rng.normal(size=(2, 3, 3, 4))},
                        lambda p: F.global_avg_pool(p['x'])),
    'batch_norm': (lambda rng: {'x': rng.normal(size=(5, 3)), 'g': rng.normal(size=(3,)),
                                'b': rng.normal(size=(3,))},
                   lambda p: F.batch_norm(p['x'], p['g'], p['b'])),
    'batch_norm_4d': (lambda rng: {'x': rng.normal(size=(3, 2, 2, 2)), 'g': rng.normal(size=(2,)),
                                   'b': rng.normal(size=(2,))},
                      lambda p: F.batch_norm(p['x'], p['g'], p['b'])),
    'sum_to_shape': (lambda rng: {'x': rng.normal(size=(3, 4))},
                     lambda p: F.sum_to_shape(p['x'], (1, 4))),
    'broadcast_to': (lambda rng: {'x': rng.normal(size=(1, 4))},
                     lambda p: F.broadcast_to(p['x'], (3, 4))),
    'slice_last_axis': (lambda rng: {'x': rng.normal(size=(2, 5))},
                        lambda p: F.slice_last_axis(p['x'], 1, 4)),
    'pad_last_axis': (lambda rng: {'x': rng.normal(size=(2, 3))},
                      lambda p: F.pad_last_axis(p['x'], 1, 6)),
}


def projected(fn, weights):
    """Scalar loss: output contracted with fixed random weights."""
    return lambda p: F.total(F.mul(fn(p), Tensor(weights)))


def autodiff_vs_finite_differences(case, seed):
    build, fn = CASES[case]
    rng = np.random.default_rng(seed)
    point = {name: np.asarray(value, dtype=F64) for name, value in build(rng).items()}
    out_shape = fn({k: Tensor(v) for k, v in point.items()}).shape
    loss_fn = projected(fn, rng.normal(size=out_shape))
    tape = Tape(dtype=F64)
    watched = {name: tape.watch(value) for name, value in point.items()}
    analytic = backward(loss_fn(watched), watched)
    numeric = finite_diff_grad(loss_fn, point, epsilon=1e-4)
    return relative_error(analytic, numeric)


@pytest.mark.parametrize('case', sorted(CASES))
@pytest.mark.parametrize('seed', range(3))
def test_backward_matches_finite_differences(case, seed):
    assert autodiff_vs_finite_differences(case, seed) <= 1e-4


@pytest.mark.slow
@pytest.mark.parametrize('case', sorted(CASES))
def test_backward_matches_finite_differences_many_points(case):
    assert max(autodiff_vs_finite_differences(case, seed) for seed in range(100)) <= 1e-4


def test_every_public_kind_is_checked():
    checked = {case.replace('_strided', '').replace('_4d', '') for case in CASES}
    assert set(PUBLIC_KINDS) <= checked


def test_relu_values():
    assert np.array_equal(F.relu(Tensor([-1.0, 0.0, 2.0])).data, [0.0, 0.0, 2.0])


def test_matmul_identity():
    a = np.random.default_rng(0).normal(size=(3, 5)).astype(np.float32)
    assert np.array_equal(F.matmul(Tensor(np.eye(3, dtype=np.float32)), Tensor(a)).data, a)


def test_conv2d_averaging_kernel():
    x = np.arange(16, dtype=F64).reshape(1, 1, 4, 4)
    kernel = np.full((1, 1, 3, 3), 1.0 / 9.0)
    out = F.conv2d(Tensor(x), Tensor(kernel), stride=1, padding=1).data
    assert out.shape == (1, 1, 4, 4)
    assert out[0, 0, 1, 1] == pytest.approx(x[0, 0, 0:3, 0:3].mean())
    assert out[0, 0, 2, 2] == pytest.approx(x[0, 0, 1:4, 1:4].mean())


def test_conv2d_matches_direct_convolution():
    rng = np.random.default_rng(3)
    x, w = rng.normal(size=(2, 3, 5, 4)), rng.normal(size=(2, 3, 3, 3))
    padded = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
    expected = np.zeros((2, 2, 5, 4))
    for n in range(2):
        for o in range(2):
            for i in range(5):
                for j in range(4):
                    expected[n, o, i, j] = np.sum(padded[n, :, i:i + 3, j:j + 3] * w[o])
    assert np.allclose(F.conv2d(Tensor(x), Tensor(w), padding=1).data, expected)


def test_maxpool_ties_go_to_first_index():
    tape = Tape(dtype=F64)
    x = tape.watch(np.ones((1, 1, 2, 2)))
    grads = backward(F.total(F.maxpool2x2(x)), {'x': x})
    assert np.array_equal(grads['x'].data[0, 0], [[1.0, 0.0], [0.0, 0.0]])


def test_gradient_of_square():
    tape = Tape(dtype=F64)
    x = tape.watch(np.array([3.0]))
    assert backward(x * x, {'x': x})['x'].data[0] == pytest.approx(6.0)


def test_second_derivative_of_cube():
    tape = Tape(dtype=F64)
    x = tape.watch(np.array([2.0]))
    first = backward(x * x * x, {'x': x}, create_graph=True)['x']
    assert first.data[0] == pytest.approx(12.0)
    second = backward(first, {'x': x})['x']
    assert second.data[0] == pytest.approx(12.0)


def test_softmax_xent_gradient_identity():
    tape = Tape(dtype=F64)
    logits = tape.watch(np.zeros((1, 5)))
    grads = backward(F.softmax_xent(logits, [2]), {'logits': logits})
    assert np.allclose(grads['logits'].data, [[0.2, 0.2, -0.8, 0.2, 0.2]], atol=1e-12)


def test_uniform_cross_entropy_is_log_n():
    loss = F.softmax_xent(Tensor(np.zeros((7, 5), dtype=F64)), np.arange(7) % 5)
    assert abs(loss.item() - np.log(5)) <= 1e-9


def test_total_derivative_through_intermediate_target():
    tape = Tape(dtype=F64)
    x = tape.watch(np.array([1.5]))
    y = x * 2.0
    grads = backward(y * y, {'x': x, 'y': y})
    assert grads['y'].data[0] == pytest.approx(2 * 3.0)
    assert grads['x'].data[0] == pytest.approx(8 * 1.5)


def test_unrelated_parameter_gets_zero_gradient():
    tape = Tape(dtype=F64)
    x, z = tape.watch(np.array([1.0])), tape.watch(np.ones((2, 2)))
    grads = backward(x * x, {'x': x, 'z': z})
    assert np.array_equal(grads['z'].data, np.zeros((2, 2)))
    assert grads['z'].shape == z.shape


def test_constant_loss_gives_zero_gradients():
    grads = backward(Tensor(np.array(1.0)), {'w': Tensor(np.ones(3))})
    assert np.array_equal(grads['w'].data, np.zeros(3))


def test_non_scalar_loss_refused():
    tape = Tape(dtype=F64)
    x = tape.watch(np.ones(3))
    with pytest.raises(GradientError):
        backward(x * x, {'x': x})


def test_second_create_graph_level_refused():
    tape = Tape(dtype=F64)
    x = tape.watch(np.array([2.0]))
    first = backward(x * x * x, {'x': x}, create_graph=True)['x']
    with pytest.raises(NestingError):
        backward(first, {'x': x}, create_graph=True)


def test_nested_context_is_single_level():
    tape = Tape()
    with tape.nested():
        assert tape.nesting_level == 1
        with pytest.raises(NestingError):
            with tape.nested():
                pass
    assert tape.nesting_level == 0


def test_operands_on_different_tapes_refused():
    a, b = Tape(dtype=F64).watch(np.ones(2)), Tape(dtype=F64).watch(np.ones(2))
    with pytest.raises(GradientError):
        F.add(a, b)


def test_shape_mismatch_names_both_shapes():
    with pytest.raises(ShapeError, match=r"\(2, 3\).*\(4, 2\)"):
        F.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((4, 2))))


def test_unknown_kind_refused():
    with pytest.raises(GradientError):
        apply_primitive('sigmoid', (Tensor(np.ones(2)),))


def test_non_finite_output_raises():
    with pytest.raises(NonFiniteError):
        Tensor(np.array([0.0, 1.0])) ** -1.0


def test_batch_norm_needs_two_rows():
    with pytest.raises(ShapeError):
        F.batch_norm(Tensor(np.ones((1, 3))), Tensor(np.ones(3)), Tensor(np.zeros(3)))


def test_finite_differences_of_square():
    grads = finite_diff_grad(lambda p: F.total(p['x'] * p['x']), {'x': np.array([3.0])}, epsilon=1e-4)
    assert abs(grads['x'].data[0] - 6.0) <= 1e-6


def test_finite_differences_of_constant():
    grads = finite_diff_grad(lambda p: Tensor(np.array(4.0)), {'a': np.ones(3), 'b': np.ones((2, 2))})
    assert all(np.array_equal(g.data, np.zeros_like(g.data)) for g in grads.values())


def test_finite_differences_refuse_non_finite():
    with pytest.raises(NonFiniteError):
        finite_diff_grad(lambda p: Tensor(np.array(np.inf)), {'x': np.ones(1)})


def test_logistic_cross_entropy_matches_finite_differences():
    x = np.array([[1.0, 2.0], [-1.0, 0.5], [0.3, -1.2], [2.0, 1.0]])
    y = np.array([1, 0, 0, 1])

    def loss(p):
        logit = F.matmul(Tensor(x), p['w'])
        return F.softmax_xent(F.concat_last_axis(Tensor(np.zeros((4, 1))), logit), y)

    point = {'w': np.array([[0.3], [-0.7]])}
    tape = Tape(dtype=F64)
    w = tape.watch(point['w'])
    assert relative_error(backward(loss({'w': w}), {'w': w}), finite_diff_grad(loss, point)) <= 1e-4


def test_relative_error_floor():
    assert relative_error(np.zeros(3), np.zeros(3)) == 0.0


def test_forward_is_deterministic():
    rng = np.random.default_rng(5)
    x, w = rng.normal(size=(2, 3, 6, 6)), rng.normal(size=(4, 3, 3, 3))
    first = F.conv2d(Tensor(x), Tensor(w), padding=1).data
    second = F.conv2d(Tensor(x), Tensor(w), padding=1).data
    assert first.tobytes() == second.tobytes()


def test_tensor_operators_record_on_tape():
    tape = Tape(dtype=F64)
    x = tape.watch(np.array([1.0, 2.0]))
    y = F.total((x - 1.0) * 3.0 + x / 2.0)
    assert y.tape is tape
    assert np.allclose(backward(y, {'x': x})['x'].data, [3.5, 3.5])
