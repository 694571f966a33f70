import struct

import numpy as np
import pytest

from deeplda.data import (
    Standardizer,
    blob_splits,
    load_csv,
    load_idx,
    make_dataset,
    read_idx_images,
    warped_blobs,
    write_csv,
    write_idx,
)
from deeplda.errors import BadMagic, CountMismatch, ParseError, Truncated


@pytest.fixture
def idx_pair(tmp_path):
    images = np.arange(3 * 2 * 2, dtype=np.uint8).reshape(3, 2, 2) * 20
    labels = np.array([0, 2, 1], dtype=np.uint8)
    paths = tmp_path / "img.idx", tmp_path / "lbl.idx"
    write_idx(*paths, images, labels)
    return paths, images, labels


def test_idx_round_trip(idx_pair):
    (img, lbl), images, labels = idx_pair
    ds = load_idx(img, lbl)
    np.testing.assert_allclose(ds.features, images.reshape(3, 4) / 255.0)
    np.testing.assert_array_equal(ds.labels, labels)
    assert ds.num_classes == 3


def test_idx_bad_magic(tmp_path, idx_pair):
    (img, lbl), _, _ = idx_pair
    with pytest.raises(BadMagic):
        read_idx_images(lbl)


def test_idx_truncated(tmp_path, idx_pair):
    (img, _), _, _ = idx_pair
    data = img.read_bytes()
    img.write_bytes(data[:-1])
    with pytest.raises(Truncated):
        read_idx_images(img)
    img.write_bytes(data[:6])
    with pytest.raises(Truncated):
        read_idx_images(img)


def test_idx_count_mismatch(tmp_path):
    img, lbl = tmp_path / "i", tmp_path / "l"
    write_idx(img, lbl, np.zeros((3, 2, 2)), np.zeros(2))
    with pytest.raises(CountMismatch):
        load_idx(img, lbl)


def test_idx_header_is_big_endian(idx_pair):
    (img, _), _, _ = idx_pair
    assert struct.unpack(">4I", img.read_bytes()[:16]) == (0x803, 3, 2, 2)


def test_csv_round_trip(tmp_path):
    ds = make_dataset([[0.1, -2.5], [1e-17, 3.0]], [1, 0])
    path = tmp_path / "d.csv"
    write_csv(path, ds)
    back = load_csv(path)
    np.testing.assert_array_equal(back.features, ds.features)
    np.testing.assert_array_equal(back.labels, ds.labels)


def test_csv_header_and_blank_lines(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("label,a,b\n0,1,2\n\n1,3,4\n")
    ds = load_csv(path, skip_header=True, num_classes=3)
    assert len(ds) == 2 and ds.num_classes == 3


@pytest.mark.parametrize("text, line", [
    ("0,1,2\n1,3\n", 2),
    ("0,1,x\n", 1),
    ("0,1\n1.5,2\n", 2),
    ("-1,1\n", 1),
    ("0,nan\n", 1),
    ("7\n", 1),
])
def test_csv_errors_report_line(tmp_path, text, line):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(ParseError) as info:
        load_csv(path)
    assert info.value.line == line


def test_csv_empty(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("\n")
    with pytest.raises(ParseError):
        load_csv(path)


def test_label_outside_declared_classes():
    with pytest.raises(ParseError):
        make_dataset([[0.0]], [3]).with_num_classes(2)


def test_standardizer():
    train = make_dataset([[1.0, 5.0], [3.0, 5.0]], [0, 1])
    st = Standardizer.fit(train.features)
    out = st.apply(train)
    np.testing.assert_allclose(out.features, [[-1.0, 0.0], [1.0, 0.0]])


def test_blobs_are_seeded_and_balanced():
    a, b = warped_blobs(300, 3, seed=5), warped_blobs(300, 3, seed=5)
    np.testing.assert_array_equal(a.features, b.features)
    np.testing.assert_array_equal(np.bincount(a.labels), [100, 100, 100])
    train, test = blob_splits(60, 30, 3, seed=0)
    assert not np.array_equal(train.features[:30], test.features)
