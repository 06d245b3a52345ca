import numpy as np
import pytest

from pymodaq_plugins_hypermaml.errors import CheckpointError
from pymodaq_plugins_hypermaml.exporters import FORMAT_VERSION, MAGIC, Checkpoint, load_checkpoint, save_checkpoint
from pymodaq_plugins_hypermaml.meta import Adam, make_algorithm
from pymodaq_plugins_hypermaml.models import EncoderConfig


@pytest.fixture
def checkpoint():
    algorithm = make_algorithm('hypermaml')
    params = algorithm.init_params(EncoderConfig('conv4', (1, 16, 16), embed_dim=4, width=4), 3,
                                   np.random.default_rng(0))
    optimizer = Adam()
    params = optimizer.step(params, {name: np.ones(shape) for name, shape in params.shapes.items()})
    return Checkpoint('f' * 64, 7, params.numpy(), optimizer.state_arrays())


def test_round_trip_is_bit_exact(checkpoint, tmp_path):
    path = save_checkpoint(checkpoint, tmp_path.joinpath('runs', 'last.ckpt'))
    loaded = load_checkpoint(path, expected_hash='f' * 64)
    assert loaded.epoch == 7
    assert loaded.config_hash == checkpoint.config_hash
    for section, original in ((loaded.tensors, checkpoint.tensors), (loaded.optimizer, checkpoint.optimizer)):
        assert list(section) == list(original)
        for name, array in original.items():
            assert section[name].shape == array.shape
            assert section[name].tobytes() == np.asarray(array, dtype=np.float32).tobytes()
    assert path.read_bytes() == loaded.to_bytes()


def test_header_layout(checkpoint):
    raw = checkpoint.to_bytes()
    assert raw[:4] == MAGIC == b'MFGE'
    assert int.from_bytes(raw[4:8], 'little') == FORMAT_VERSION
    assert int.from_bytes(raw[8:10], 'little') == 64


def test_scalar_and_empty_entries():
    original = Checkpoint('h', 0, {'scalar': np.float32(2.5), 'empty': np.zeros((0, 3), dtype=np.float32)})
    loaded = Checkpoint.from_bytes(original.to_bytes())
    assert loaded.tensors['scalar'].shape == ()
    assert loaded.tensors['scalar'] == np.float32(2.5)
    assert loaded.tensors['empty'].shape == (0, 3)
    assert loaded.optimizer == {}


def test_bad_magic_is_named(checkpoint):
    raw = b'XXXX' + checkpoint.to_bytes()[4:]
    with pytest.raises(CheckpointError, match='MFGE'):
        Checkpoint.from_bytes(raw)


@pytest.mark.parametrize('cut', [2, 6, 40, -1])
def test_truncated_checkpoint(checkpoint, cut):
    raw = checkpoint.to_bytes()
    with pytest.raises(CheckpointError, match='truncated'):
        Checkpoint.from_bytes(raw[:cut])


def test_trailing_bytes(checkpoint):
    with pytest.raises(CheckpointError, match='trailing'):
        Checkpoint.from_bytes(checkpoint.to_bytes() + b'\x00')


def test_unknown_format_version(checkpoint):
    raw = bytearray(checkpoint.to_bytes())
    raw[4:8] = (FORMAT_VERSION + 1).to_bytes(4, 'little')
    with pytest.raises(CheckpointError, match='version'):
        Checkpoint.from_bytes(bytes(raw))


def test_config_hash_mismatch(checkpoint, tmp_path):
    path = save_checkpoint(checkpoint, tmp_path.joinpath('last.ckpt'))
    with pytest.raises(CheckpointError, match='--force'):
        load_checkpoint(path, expected_hash='0' * 64)
    assert load_checkpoint(path, expected_hash='0' * 64, force=True).epoch == 7
    assert load_checkpoint(path).epoch == 7


def test_save_leaves_no_temporary_file(checkpoint, tmp_path):
    save_checkpoint(checkpoint, tmp_path.joinpath('best.ckpt'))
    save_checkpoint(checkpoint, tmp_path.joinpath('best.ckpt'))
    assert [p.name for p in tmp_path.iterdir()] == ['best.ckpt']
