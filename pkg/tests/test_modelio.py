"""Model file round trips and the three distinct failure modes."""

import json
import struct

import numpy as np
import pytest

from moodtunes import modelio, models


@pytest.fixture(scope="module")
def small_model():
    return models.build_model(models.make_spec("CNN-Ethnicity", n_conv=1, n_pool=1), rng_seed=5)


@pytest.fixture
def saved(small_model, tmp_path):
    path = tmp_path / "model.bin"
    modelio.save_model(small_model, path)
    return path


def forward_fixed(model, seed=0, n=1):
    x = np.random.default_rng(seed).random((n, 1, 48, 48), dtype=np.float32)
    return model.forward(x)


class TestRoundTrip:
    def test_forward_within_1e6(self, small_model, saved):
        loaded = modelio.load_model(saved)
        a = forward_fixed(small_model)
        b = forward_fixed(loaded)
        assert np.max(np.abs(a - b)) < 1e-6

    def test_forward_equivalence_on_100_inputs(self, small_model, saved):
        loaded = modelio.load_model(saved)
        x = np.random.default_rng(1).random((100, 1, 48, 48), dtype=np.float32)
        a = small_model.predict(x)
        b = loaded.predict(x)
        assert np.max(np.abs(a - b)) < 1e-6

    def test_spec_survives(self, small_model, saved):
        loaded = modelio.load_model(saved)
        assert loaded.spec == small_model.spec

    def test_running_stats_survive(self, saved, small_model):
        bn = next(l for l in small_model.layers if hasattr(l, "running_mean"))
        bn.running_mean = bn.running_mean + 0.5
        try:
            path2 = saved.parent / "model2.bin"
            modelio.save_model(small_model, path2)
            loaded = modelio.load_model(path2)
            bn2 = next(l for l in loaded.layers if hasattr(l, "running_mean"))
            np.testing.assert_allclose(bn2.running_mean, bn.running_mean, atol=1e-6)
        finally:
            bn.running_mean = bn.running_mean - 0.5

    def test_header_layout(self, saved):
        blob = saved.read_bytes()
        assert blob[:4] == b"MRSM"
        assert blob[4] == 1
        (meta_len,) = struct.unpack("<I", blob[5:9])
        meta = json.loads(blob[9 : 9 + meta_len].decode("utf-8"))
        assert {"spec", "tensors"} <= set(meta)
        data_len = sum(
            4 * int(np.prod(t["shape"])) for t in meta["tensors"]
        )
        assert len(blob) == 9 + meta_len + data_len


class TestFailureModes:
    def test_bad_magic(self, saved, tmp_path):
        blob = bytearray(saved.read_bytes())
        blob[:4] = b"XXXX"
        bad = tmp_path / "bad_magic.bin"
        bad.write_bytes(bytes(blob))
        with pytest.raises(modelio.ModelFormatError, match="magic"):
            modelio.load_model(bad)

    def test_bad_version(self, saved, tmp_path):
        blob = bytearray(saved.read_bytes())
        blob[4] = 9
        bad = tmp_path / "bad_version.bin"
        bad.write_bytes(bytes(blob))
        with pytest.raises(modelio.ModelFormatError, match="version"):
            modelio.load_model(bad)

    def test_truncated_tensor_block(self, saved, tmp_path):
        blob = saved.read_bytes()
        bad = tmp_path / "short.bin"
        bad.write_bytes(blob[:-40])
        with pytest.raises(modelio.ModelTruncationError):
            modelio.load_model(bad)

    def test_shape_mismatch(self, saved, tmp_path):
        blob = saved.read_bytes()
        (meta_len,) = struct.unpack("<I", blob[5:9])
        meta = json.loads(blob[9 : 9 + meta_len].decode("utf-8"))
        # claim a different kernel shape than the architecture implies
        meta["tensors"][0]["shape"] = [64, 1, 3, 3]
        new_meta = json.dumps(meta).encode("utf-8")
        bad = tmp_path / "shape.bin"
        bad.write_bytes(
            blob[:5] + struct.pack("<I", len(new_meta)) + new_meta + blob[9 + meta_len :] + b"\0" * 200000
        )
        with pytest.raises(modelio.ModelShapeError):
            modelio.load_model(bad)

    def test_not_json_metadata(self, tmp_path):
        bad = tmp_path / "bad_meta.bin"
        meta = b"not json at all"
        bad.write_bytes(b"MRSM" + bytes([1]) + struct.pack("<I", len(meta)) + meta)
        with pytest.raises(modelio.ModelFormatError, match="JSON"):
            modelio.load_model(bad)

    def test_empty_file(self, tmp_path):
        bad = tmp_path / "empty.bin"
        bad.write_bytes(b"")
        with pytest.raises(modelio.ModelFormatError):
            modelio.load_model(bad)
