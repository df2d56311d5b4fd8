import numpy as np
import pytest

from qrwlab.heatmap import MAXVAL, gray_levels, read_field_csv, read_pgm, render_heatmap


def test_point_mass_is_one_white_pixel():
    v = np.zeros((5, 4))
    v[1, 3] = 0.7
    img = read_pgm(render_heatmap(v))
    assert img.shape == (4, 5)
    assert np.count_nonzero(img) == 1
    # x to the right, y upwards: (x=1, y=3) lands in the top row
    assert img[0, 1] == MAXVAL


def test_uniform_field_is_one_gray():
    img = read_pgm(render_heatmap(np.full((6, 6), 0.25)))
    assert np.all(img == MAXVAL)
    assert np.all(read_pgm(render_heatmap(np.zeros((3, 3)))) == 0)


def test_gray_mapping():
    g = gray_levels([0, 0.25, 1.0], gamma=0.5)
    assert g.tolist() == [0, round(0.5 * MAXVAL), MAXVAL]
    assert gray_levels([0, 0.25, 1.0], gamma=1).tolist() == [0, round(0.25 * MAXVAL), MAXVAL]
    lg = gray_levels([1e-12, 1.0], log_scale=True)
    assert lg[1] == MAXVAL
    assert lg[0] == round(np.log(2) / np.log1p(1e12) * MAXVAL)
    for bad in ([], [-1, 2], [np.nan]):
        with pytest.raises(ValueError):
            gray_levels(bad)
    with pytest.raises(ValueError):
        gray_levels([1], gamma=0)


def test_pgm_format():
    field = np.random.default_rng(0).uniform(size=(40, 30))
    comment = "key=value " * 20
    data = render_heatmap(field, comments=[comment])
    lines = data.decode("ascii").splitlines()
    assert lines[0] == "P2"
    assert all(len(line) <= 70 for line in lines)
    assert "40 30" in lines and str(MAXVAL) in lines
    assert data == render_heatmap(field.copy(), comments=[comment])
    one_d = read_pgm(render_heatmap(np.arange(5.0)))
    assert one_d.shape == (1, 5)
    with pytest.raises(ValueError):
        render_heatmap(np.ones((2, 2, 2)))


def test_read_field_csv(tmp_path):
    p = tmp_path / "f.csv"
    p.write_text("# run\nk1,k2,p_total\n-1,0,0.25\n1,2,0.75\n")
    f = read_field_csv(p)
    assert f.shape == (3, 3)
    assert f[0, 0] == 0.25 and f[2, 2] == 0.75 and f.sum() == 1
