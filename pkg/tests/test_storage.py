import struct
import unittest

import numpy as np
import pytest

from autograd.tensor import Tensor, no_grad
from errors import DimensionError, InputError
from layers import StgcnModel
from layers.gradcheck import random_bundle
from storage.checkpoint import MAGIC, Checkpoint, decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint
from storage.history import EpochRecord, read_history_csv, render_history_csv, write_history_csv
from training.trainer import model_from_checkpoint


def small_model(seed=0):
    bundle = random_bundle(4, np.random.default_rng(seed))
    return bundle, StgcnModel(bundle, history=8, channels=((1, 3, 4),), kt=3, k=2, seed=seed)


def test_checkpoint_reload_gives_identical_predictions(tmp_path):
    bundle, model = small_model()
    rng = np.random.default_rng(1)
    model.load_state({name: value + rng.normal(0.0, 0.1, size=value.shape) for name, value in model.state_dict().items()})
    checkpoint = Checkpoint(descriptor={'model': model.descriptor(), 'stats': {'mean': 60.0, 'std': 5.0}}, state=model.state_dict())
    path = str(tmp_path / 'model.stgc')
    save_checkpoint(checkpoint, path)
    loaded = load_checkpoint(path)
    assert loaded.descriptor == checkpoint.descriptor
    assert list(loaded.state) == list(checkpoint.state)
    twin = model_from_checkpoint(loaded, bundle)
    x = rng.normal(size=(5, 8, 4, 1))
    with no_grad():
        assert twin(Tensor(x)).data.tobytes() == model(Tensor(x)).data.tobytes()


def test_encoding_is_deterministic():
    _, model = small_model(seed=3)
    checkpoint = Checkpoint(descriptor={'model': model.descriptor()}, state=model.state_dict())
    payload = encode_checkpoint(checkpoint)
    assert payload.startswith(MAGIC)
    assert encode_checkpoint(checkpoint) == payload
    assert encode_checkpoint(decode_checkpoint(payload)) == payload


def test_scalar_and_empty_tensors_survive():
    checkpoint = Checkpoint(descriptor={}, state={'scalar': np.array(2.5), 'empty': np.zeros((0, 3))})
    decoded = decode_checkpoint(encode_checkpoint(checkpoint))
    assert decoded.state['scalar'].shape == ()
    assert float(decoded.state['scalar']) == 2.5
    assert decoded.state['empty'].shape == (0, 3)


class TestCorruptCheckpoints(unittest.TestCase):
    def setUp(self):
        _, model = small_model()
        self.payload = encode_checkpoint(Checkpoint(descriptor={'model': model.descriptor()}, state=model.state_dict()))

    def test_bad_magic(self):
        with self.assertRaises(InputError) as ctx:
            decode_checkpoint(b'XXXX' + self.payload[4:], 'ckpt')
        self.assertIn('bad magic', str(ctx.exception))

    def test_truncation_is_reported(self):
        for cut in (2, 10, len(self.payload) - 3):
            with self.subTest(cut=cut):
                with self.assertRaises(InputError) as ctx:
                    decode_checkpoint(self.payload[:cut], 'ckpt')
                self.assertIn('truncated', str(ctx.exception))

    def test_unsupported_version(self):
        with self.assertRaises(InputError):
            decode_checkpoint(MAGIC + struct.pack('<I', 99) + self.payload[8:])

    def test_missing_file(self):
        with self.assertRaises(InputError):
            load_checkpoint('/nonexistent/model.stgc')

    def test_wrong_graph_size(self):
        _, model = small_model()
        checkpoint = decode_checkpoint(self.payload)
        with self.assertRaises(DimensionError):
            model_from_checkpoint(checkpoint, random_bundle(5, np.random.default_rng(0)))


def test_history_csv_round_trip(tmp_path):
    records = [EpochRecord(0, 1.25, 3.5, 4.75, 1e-3), EpochRecord(1, 0.1 + 0.2, 3.0, 4.0, 1e-3)]
    text = render_history_csv(records)
    assert text.splitlines()[0] == 'epoch,train_loss,val_mae,val_rmse,lr'
    assert text.splitlines()[1] == '0,1.25,3.5,4.75,0.001'
    path = str(tmp_path / 'history.csv')
    write_history_csv(records, path)
    assert read_history_csv(path) == records


@pytest.mark.parametrize('body', ['epoch,loss\n0,1.0\n', 'epoch,train_loss,val_mae,val_rmse,lr\nzero,1,2,3,4\n'])
def test_malformed_history(tmp_path, body):
    path = tmp_path / 'history.csv'
    path.write_text(body, encoding='utf-8')
    with pytest.raises(InputError):
        read_history_csv(str(path))


if __name__ == '__main__':
    unittest.main()
