import numpy as np
import pytest

from pymodaq_plugins_hypermaml.autodiff import Tape, Tensor, backward, finite_diff_grad, relative_error
from pymodaq_plugins_hypermaml.autodiff import functional as F
from pymodaq_plugins_hypermaml.errors import ConfigError, ShapeError
from pymodaq_plugins_hypermaml.models import (EncoderConfig, HyperNetConfig, ParamSet, build_encoder, build_head,
                                              build_hypernetwork, classify, encode, hypernet_forward)
from pymodaq_plugins_hypermaml.models.encoders import parameter_spec
from pymodaq_plugins_hypermaml.models.init import init_params, weight_bound

F64 = np.float64


def joined_model(encoder_cfg, n_way=3, seed=0, dtype=F64):
    rng = np.random.default_rng(seed)
    encoder = build_encoder(encoder_cfg, rng, dtype=dtype)
    head = build_head(encoder_cfg.embedding_dim, n_way, rng, dtype=dtype)
    return ParamSet.join(encoder, head)


def model_loss(x, y):
    def loss(params):
        embeddings = encode(params.part('encoder'), Tensor(x))
        return F.softmax_xent(classify(params.part('head'), embeddings), y)
    return loss


def gradcheck(params, loss):
    watched = params.watch(Tape(dtype=F64))
    analytic = backward(loss(watched), watched)
    return relative_error(analytic, finite_diff_grad(loss, params, epsilon=1e-6))


def test_conv4_parameter_names_and_shapes():
    spec = parameter_spec(EncoderConfig('conv4', (3, 28, 28), embed_dim=8, width=8))
    assert spec['conv0.weight'][0] == (8, 3, 3, 3)
    assert spec['conv3.weight'][0] == (8, 8, 3, 3)
    assert spec['bn2.weight'] == ((8,), 'scale')
    assert len(spec) == 16


def test_conv4_embeds_28px_into_width():
    cfg = EncoderConfig('conv4', (1, 28, 28), embed_dim=8, width=8)
    assert cfg.feature_map == (1, 1)
    gamma = build_encoder(cfg, np.random.default_rng(0))
    x = np.random.default_rng(1).uniform(size=(4, 1, 28, 28)).astype(np.float32)
    assert encode(gamma, x).shape == (4, 8)


def test_conv4_pools_larger_maps():
    cfg = EncoderConfig('conv4', (1, 32, 32), embed_dim=4, width=4)
    assert cfg.feature_map == (2, 2)
    gamma = build_encoder(cfg, np.random.default_rng(0))
    assert encode(gamma, np.zeros((2, 1, 32, 32), dtype=np.float32)).shape == (2, 4)


def test_encoder_refuses_wrong_input_shape():
    gamma = build_encoder(EncoderConfig('mlp', (6,), embed_dim=4, width=5), np.random.default_rng(0))
    with pytest.raises(ShapeError):
        encode(gamma, np.zeros((3, 7), dtype=np.float32))


@pytest.mark.parametrize('kwargs', [dict(variant='resnet'),
                                    dict(variant='conv4', input_shape=(1, 8, 8)),
                                    dict(variant='conv4', embed_dim=32, width=64),
                                    dict(variant='linear2d', input_shape=(3,)),
                                    dict(variant='mlp', input_shape=(4,), width=0)])
def test_invalid_encoder_configs(kwargs):
    with pytest.raises(ConfigError):
        EncoderConfig(**kwargs)


def test_linear2d_is_identity():
    gamma = build_encoder(EncoderConfig('linear2d', (2,)), np.random.default_rng(0))
    points = np.array([[1.0, -2.0], [0.5, 3.0]], dtype=np.float32)
    assert len(gamma) == 0
    assert np.array_equal(encode(gamma, points).data, points)


@pytest.mark.parametrize('batch_norm', [True, False])
def test_mlp_graph_gradients(batch_norm):
    cfg = EncoderConfig('mlp', (6,), embed_dim=4, width=5, batch_norm=batch_norm)
    params = joined_model(cfg, seed=2)
    rng = np.random.default_rng(7)
    x, y = rng.normal(size=(6, 6)), np.array([0, 1, 2, 0, 1, 2])
    assert gradcheck(params, model_loss(x, y)) <= 1e-4


def test_conv4_graph_gradients():
    cfg = EncoderConfig('conv4', (1, 16, 16), embed_dim=3, width=3)
    params = joined_model(cfg, seed=4)
    rng = np.random.default_rng(11)
    x, y = rng.normal(size=(3, 1, 16, 16)), np.array([0, 1, 2])
    assert gradcheck(params, model_loss(x, y)) <= 1e-3


def test_head_shapes_and_logits():
    theta = build_head(4, 5, np.random.default_rng(0))
    assert theta.shapes == {'weight': (4, 5), 'bias': (5,)}
    assert classify(theta, Tensor(np.ones((3, 4), dtype=np.float32))).shape == (3, 5)
    with pytest.raises(ShapeError):
        classify(theta, Tensor(np.ones((3, 6), dtype=np.float32)))


def test_head_needs_two_classes():
    with pytest.raises(ConfigError):
        build_head(4, 1, np.random.default_rng(0))


@pytest.mark.parametrize('enhancement, width', [(True, 74), (False, 69)])
def test_hypernetwork_input_width(enhancement, width):
    assert HyperNetConfig(embed_dim=64, n_way=5, enhancement=enhancement).input_width == width


def test_zero_initialized_hypernetwork_outputs_zero():
    cfg = HyperNetConfig(embed_dim=6, n_way=3, hidden=8)
    eta = build_hypernetwork(cfg, np.random.default_rng(0))
    rows = Tensor(np.random.default_rng(1).normal(size=(3, cfg.input_width)).astype(np.float32))
    out = hypernet_forward(eta, rows)
    assert out.shape == (3, 7)
    assert not np.any(out.data)


def test_hypernetwork_depth_is_fixed():
    with pytest.raises(ConfigError):
        HyperNetConfig(depth=2)


@pytest.mark.parametrize('scheme, bound', [('kaiming_uniform', np.sqrt(6.0 / 20)),
                                           ('xavier_uniform', np.sqrt(6.0 / 30)),
                                           ('zeros', 0.0)])
def test_init_schemes(scheme, bound):
    params = init_params({'w': ((20, 10), 'weight'), 'b': ((10,), 'bias'), 's': ((10,), 'scale')},
                         np.random.default_rng(0), scheme, role='head')
    assert weight_bound((20, 10), scheme) == pytest.approx(bound)
    assert np.all(np.abs(params['w'].data) <= bound)
    assert not np.any(params['b'].data)
    assert np.all(params['s'].data == 1)


@pytest.mark.parametrize('scheme, target', [('kaiming_uniform', np.sqrt(2.0 / 100)),
                                            ('xavier_uniform', np.sqrt(2.0 / 200))])
def test_init_std_matches_the_scheme(scheme, target):
    params = init_params({'w': ((100, 100), 'weight')}, np.random.default_rng(1), scheme, role='head')
    assert params['w'].data.size == 10000
    assert abs(np.std(params['w'].data) / target - 1.0) <= 0.2


def test_init_is_seeded():
    cfg = EncoderConfig('conv4', (1, 16, 16), embed_dim=4, width=4)
    first = build_encoder(cfg, np.random.default_rng(3)).flatten()
    second = build_encoder(cfg, np.random.default_rng(3)).flatten()
    assert first.tobytes() == second.tobytes()


def test_paramset_join_and_parts():
    rng = np.random.default_rng(0)
    encoder = build_encoder(EncoderConfig('mlp', (3,), embed_dim=2, width=4), rng)
    head = build_head(2, 2, rng)
    joined = ParamSet.join(encoder, head)
    assert joined.roles() == ('encoder', 'head')
    assert 'encoder/fc0.weight' in joined and 'head/bias' in joined
    assert joined.part('head').shapes == head.shapes
    assert joined.part('encoder').config == encoder.config
    assert joined.size == encoder.size + head.size
    zeroed = joined.updated(head=head.replace({n: Tensor(np.zeros(s, dtype=np.float32))
                                               for n, s in head.shapes.items()}))
    assert not np.any(zeroed.part('head')['weight'].data)
    assert np.array_equal(zeroed.part('encoder').flatten(), encoder.flatten())


def test_paramset_replace_checks_shapes():
    head = build_head(2, 3, np.random.default_rng(0))
    with pytest.raises(ShapeError):
        head.replace({'weight': Tensor(np.zeros((3, 2))), 'bias': head['bias']})
    with pytest.raises(ShapeError):
        head.replace({'weight': head['weight']})


def test_paramset_flatten_round_trip():
    head = build_head(3, 4, np.random.default_rng(0))
    restored = head.unflatten(head.flatten())
    assert all(np.array_equal(restored[n].data, head[n].data) for n in head)
    with pytest.raises(ShapeError):
        head.unflatten(np.zeros(head.size + 1))
