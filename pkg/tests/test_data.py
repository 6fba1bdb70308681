"""CSV parsing, label filtering, normalization, and splitting."""

import numpy as np
import pytest

from moodtunes import data

# native codes: 0 angry, 1 disgust, 2 fear, 3 happy, 4 sad, 5 surprise, 6 neutral
PIX = " ".join(["10"] * 2304)


def emotion_csv(tmp_path, rows, header="emotion,pixels"):
    p = tmp_path / "emotions.csv"
    p.write_text("\n".join([header] + rows) + "\n")
    return p


def age_csv(tmp_path, rows):
    p = tmp_path / "ages.csv"
    p.write_text("\n".join(["age,ethnicity,gender,img_name,pixels"] + rows) + "\n")
    return p


class TestParsePixelString:
    def test_all_zero_48x48(self):
        img = data.parse_pixel_string(" ".join(["0"] * 2304), 48, 48)
        assert img.shape == (48, 48)
        assert not img.any()

    def test_single_pixel(self):
        np.testing.assert_array_equal(data.parse_pixel_string("255", 1, 1), [[255]])

    def test_row_major_order(self):
        img = data.parse_pixel_string("1 2 3 4 5 6", 3, 2)
        np.testing.assert_array_equal(img, [[1, 2, 3], [4, 5, 6]])

    def test_wrong_token_count(self):
        with pytest.raises(data.DataFormatError, match="2303 tokens"):
            data.parse_pixel_string(" ".join(["0"] * 2303), 48, 48)

    def test_non_integer_token(self):
        with pytest.raises(data.DataFormatError, match="non-integer"):
            data.parse_pixel_string("1 x 3 4", 2, 2)

    def test_out_of_range_value(self):
        with pytest.raises(data.DataFormatError, match=r"\[0, 255\]"):
            data.parse_pixel_string("1 2 3 256", 2, 2)


class TestNormalize:
    def test_endpoints(self):
        assert data.normalize(np.array([255]))[0] == 1.0
        assert data.normalize(np.array([0]))[0] == 0.0

    def test_exact_fifth(self):
        assert data.normalize(np.array([51]))[0] == pytest.approx(0.2, abs=0)

    def test_monotone(self):
        rng = np.random.default_rng(0)
        x = rng.integers(0, 256, 100)
        y = rng.integers(0, 256, 100)
        nx, ny = data.normalize(x), data.normalize(y)
        assert np.all((x <= y) == (nx <= ny))

    def test_out_of_range(self):
        with pytest.raises(data.DataFormatError):
            data.normalize(np.array([300]))


class TestLoadEmotionCsv:
    def test_filters_to_four_classes(self, tmp_path):
        rows = [f"{code},{PIX}" for code in range(7)]
        ds = data.load_fer2013(emotion_csv(tmp_path, rows))
        assert set(ds.y) <= {0, 1, 2, 3}
        assert len(ds) == 4  # disgust, fear, surprise dropped

    def test_remap_is_bijective(self, tmp_path):
        rows = [f"0,{PIX}", f"3,{PIX}", f"6,{PIX}", f"4,{PIX}"]
        ds = data.load_fer2013(emotion_csv(tmp_path, rows))
        assert list(ds.y) == [
            data.Emotion.ANGRY,
            data.Emotion.HAPPY,
            data.Emotion.NEUTRAL,
            data.Emotion.SAD,
        ]

    def test_empty_file_is_empty_dataset(self, tmp_path):
        ds = data.load_fer2013(emotion_csv(tmp_path, []))
        assert len(ds) == 0
        assert ds.x.shape == (0, 1, 48, 48)

    def test_hand_counted_class_totals(self, tmp_path):
        # 20-row fixture: 5 angry, 4 happy, 3 neutral, 2 sad, 6 filtered
        codes = [0] * 5 + [3] * 4 + [6] * 3 + [4] * 2 + [1, 1, 2, 2, 5, 5]
        ds = data.load_fer2013(emotion_csv(tmp_path, [f"{c},{PIX}" for c in codes]))
        counts = dict(zip(*np.unique(ds.y, return_counts=True)))
        assert counts == {0: 5, 1: 4, 2: 3, 3: 2}

    def test_usage_column_selects_split(self, tmp_path):
        rows = [f"0,{PIX},Training", f"3,{PIX},PublicTest", f"6,{PIX},PrivateTest"]
        path = emotion_csv(tmp_path, rows, header="emotion,pixels,usage")
        train = data.load_fer2013(path, "train")
        test = data.load_fer2013(path, "test")
        assert list(train.y) == [data.Emotion.ANGRY]
        assert sorted(test.y) == [data.Emotion.HAPPY, data.Emotion.NEUTRAL]

    def test_malformed_rows_skipped_with_warning(self, tmp_path, caplog):
        rows = [f"0,{PIX}", f"9,{PIX}", "3,1 2 3"]
        with caplog.at_level("WARNING"):
            ds = data.load_fer2013(emotion_csv(tmp_path, rows))
        assert len(ds) == 1
        assert "skipped 2" in caplog.text

    def test_unknown_code_raises_at_row_level(self):
        row = {"emotion": "9", "pixels": PIX}
        with pytest.raises(data.DataFormatError, match="unknown emotion code"):
            data.parse_emotion_row(row, data.DEFAULT_EMOTION_CODE_NAMES)

    def test_configurable_code_map(self, tmp_path):
        # a copy where 0 means happy instead of angry
        remap = {0: "happy", 1: "angry"}
        ds = data.load_fer2013(
            emotion_csv(tmp_path, [f"0,{PIX}"]), code_names=remap
        )
        assert list(ds.y) == [data.Emotion.HAPPY]

    def test_pixels_normalized(self, tmp_path):
        ds = data.load_fer2013(emotion_csv(tmp_path, [f"0,{PIX}"]))
        assert ds.x.shape == (1, 1, 48, 48)
        np.testing.assert_allclose(ds.x, 10 / 255, atol=1e-7)


class TestLoadEmotionTree(object):
    def test_tree_layout(self, tmp_path):
        from PIL import Image

        for cls, n in [("angry", 2), ("happy", 1), ("disgust", 3)]:
            d = tmp_path / "train" / cls
            d.mkdir(parents=True)
            for i in range(n):
                Image.fromarray(
                    np.full((48, 48), 100, dtype=np.uint8), "L"
                ).save(d / f"{i}.png")
        ds = data.load_fer2013(tmp_path, "train")
        assert len(ds) == 3  # disgust dir ignored
        assert sorted(ds.y) == [data.Emotion.ANGRY, data.Emotion.ANGRY, data.Emotion.HAPPY]
        np.testing.assert_allclose(ds.x, 100 / 255, atol=1e-7)

    def test_missing_split_dir(self, tmp_path):
        (tmp_path / "train").mkdir()
        with pytest.raises(data.DataFormatError, match="test"):
            data.load_fer2013(tmp_path, "test")


class TestLoadAgeEthnicity:
    def test_ten_row_fixture(self, tmp_path):
        rows = [f"{20 + i},{i % 5},{i % 2},img{i}.jpg,{PIX}" for i in range(10)]
        got = data.load_age_ethnicity(age_csv(tmp_path, rows))
        assert len(got) == 10
        assert list(got.ages) == list(range(20, 30))
        assert list(got.ethnicities) == [i % 5 for i in range(10)]
        # gender and img_name do not survive loading
        assert not hasattr(got, "gender")

    def test_age_range_error_at_row_level(self):
        row = {"age": "117", "ethnicity": "0", "pixels": PIX}
        with pytest.raises(data.DataFormatError, match="outside"):
            data.parse_age_row(row)

    def test_ethnicity_code_4_is_others(self):
        row = {"age": "30", "ethnicity": "4", "pixels": PIX}
        _, ethnicity, _ = data.parse_age_row(row)
        assert ethnicity == data.Ethnicity.OTHERS

    def test_bad_rows_skipped(self, tmp_path, caplog):
        rows = [f"25,0,0,a.jpg,{PIX}", f"117,0,0,b.jpg,{PIX}", f"30,9,0,c.jpg,{PIX}"]
        with caplog.at_level("WARNING"):
            got = data.load_age_ethnicity(age_csv(tmp_path, rows))
        assert len(got) == 1
        assert "skipped 2" in caplog.text

    def test_per_model_datasets(self, tmp_path):
        rows = [f"40,2,1,x.jpg,{PIX}"]
        got = data.load_age_ethnicity(age_csv(tmp_path, rows))
        age_ds = got.age_dataset()
        eth_ds = got.ethnicity_dataset()
        assert age_ds.kind == "age" and age_ds.y.dtype == np.float64
        assert eth_ds.kind == "ethnicity" and eth_ds.y[0] == 2


class TestSplit:
    def make(self, n):
        return data.Dataset(
            np.arange(n, dtype=np.float32).reshape(n, 1, 1, 1),
            np.arange(n),
            "emotion",
        )

    def test_sizes_and_disjoint(self):
        train, test = data.split(self.make(10), 0.2, 0)
        assert (len(train), len(test)) == (8, 2)
        assert not set(train.y) & set(test.y)

    def test_deterministic(self):
        a_train, a_test = data.split(self.make(20), 0.3, 7)
        b_train, b_test = data.split(self.make(20), 0.3, 7)
        assert list(a_train.y) == list(b_train.y)
        assert list(a_test.y) == list(b_test.y)

    def test_union_is_input(self):
        train, test = data.split(self.make(15), 0.4, 3)
        assert sorted(list(train.y) + list(test.y)) == list(range(15))

    def test_shuffles_before_cut(self):
        _, test = data.split(self.make(50), 0.2, 1)
        assert list(test.y) != list(range(10))

    def test_too_small(self):
        with pytest.raises(data.DataFormatError):
            data.split(self.make(1), 0.5, 0)

    def test_bad_fraction(self):
        with pytest.raises(ValueError):
            data.split(self.make(10), 1.5, 0)


class TestTake:
    def test_prefix(self):
        ds = data.Dataset(np.zeros((5, 1, 1, 1), np.float32), np.arange(5), "emotion")
        assert list(data.take(ds, 3).y) == [0, 1, 2]
        assert len(data.take(ds, 99)) == 5
        assert data.take(ds, None) is ds
