import csv

import numpy as np
import pytest

from gsr import cli, operators, pgm


@pytest.fixture
def truth_image(tmp_path, rng):
    img = np.round(rng.uniform(0, 255, (32, 32)))
    p = tmp_path / "truth.pgm"
    pgm.save_pgm(img, p)
    return p, img


def run(argv):
    return cli.main([str(a) for a in argv])


# ---------------------------------------------------------------------------
# degrade


def test_degrade_inpaint_writes_image_and_mask(tmp_path, truth_image):
    path, img = truth_image
    out = tmp_path / "deg.pgm"
    assert run(["degrade", "--task", "inpaint", "--fraction", "0.8", "--seed", "3", path, "--out", out]) == 0
    assert out.exists()
    mask = tmp_path / "deg.mask.pgm"
    assert mask.exists()
    keep = operators.load_mask(mask).keep
    got = pgm.load_pgm(out)
    assert np.array_equal(got[~keep], np.zeros(np.count_nonzero(~keep)))
    assert np.array_equal(got[keep], img[keep])


def test_degrade_is_deterministic(tmp_path, truth_image):
    path, _ = truth_image
    a, b = tmp_path / "a.pgm", tmp_path / "b.pgm"
    for out in (a, b):
        assert run(["degrade", "--task", "inpaint", "--fraction", "0.8", "--seed", "3", path, "--out", out]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_degrade_deblur_writes_kernel_sidecar(tmp_path, truth_image):
    path, img = truth_image
    out = tmp_path / "blurred.pgm"
    assert run(["degrade", "--task", "deblur", "--kernel", "uniform9", "--sigma", "1.41421356", path, "--out", out]) == 0
    k = operators.load_kernel(tmp_path / "blurred.kernel.txt")
    assert k.kernel.shape == (9, 9)
    assert np.allclose(k.kernel, 1.0 / 81.0)


def test_degrade_cs_records_measurement_count(tmp_path):
    img = np.zeros((256, 256))
    img[::2] = 120.0
    src = tmp_path / "t.pgm"
    pgm.save_pgm(img, src)
    out = tmp_path / "m.gsrm"
    assert run(["degrade", "--task", "cs", "--ratio", "0.3", "--seed", "5", src, "--out", out]) == 0
    meas = operators.load_measurements(out)
    assert meas.m == 307
    assert meas.block_side == 32 and meas.blocks_y == 8 and meas.blocks_x == 8


def test_degrade_cs_pads_odd_sizes(tmp_path, rng):
    img = np.round(rng.uniform(0, 255, (40, 40)))
    src = tmp_path / "t.pgm"
    pgm.save_pgm(img, src)
    out = tmp_path / "m.gsrm"
    assert run(["degrade", "--task", "cs", "--ratio", "0.5", "--pad", src, "--out", out]) == 0
    assert operators.load_measurements(out).image_shape == (64, 64)
    # without --pad the command fails and leaves nothing behind
    out2 = tmp_path / "m2.gsrm"
    assert run(["degrade", "--task", "cs", "--ratio", "0.5", src, "--out", out2]) == 1
    assert not out2.exists()


def test_degrade_missing_input_fails_cleanly(tmp_path, capsys):
    out = tmp_path / "x.pgm"
    rc = run(["degrade", "--task", "inpaint", "--fraction", "0.8", tmp_path / "nope.pgm", "--out", out])
    assert rc == 1
    assert not out.exists()
    assert "error:" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# metric


def test_metric_psnr_inf_and_value(tmp_path, capsys):
    a = np.zeros((8, 8))
    pa, pb = tmp_path / "a.pgm", tmp_path / "b.pgm"
    pgm.save_pgm(a, pa)
    pgm.save_pgm(a + 10.0, pb)
    assert run(["metric", pa, pa]) == 0
    assert "psnr_db=inf" in capsys.readouterr().out
    assert run(["metric", pa, pb]) == 0
    assert "psnr_db=28.1308" in capsys.readouterr().out


def test_metric_with_degraded_prints_isnr(tmp_path, capsys):
    ref = np.zeros((8, 8))
    paths = {}
    for name, img in (("ref", ref), ("deg", ref + 20.0), ("test", ref + 10.0)):
        paths[name] = tmp_path / f"{name}.pgm"
        pgm.save_pgm(img, paths[name])
    assert run(["metric", paths["ref"], paths["test"], "--degraded", paths["deg"]]) == 0
    out = capsys.readouterr().out
    assert "isnr_db=6.0206" in out


# ---------------------------------------------------------------------------
# restore


def small_solver_flags():
    # keep runtime down: few iterations, small group count
    return ["--iters", "3", "--c", "16"]


def test_restore_inpaint_end_to_end(tmp_path, truth_image, capsys):
    path, img = truth_image
    deg = tmp_path / "deg.pgm"
    run(["degrade", "--task", "inpaint", "--fraction", "0.8", "--seed", "3", path, "--out", deg])
    out = tmp_path / "rest.pgm"
    trace = tmp_path / "trace.csv"
    rc = run(["restore", "--task", "inpaint", deg, "--mask", tmp_path / "deg.mask.pgm",
              "--ground-truth", path, "--out", out, "--trace", trace] + small_solver_flags())
    assert rc == 0
    fields = capsys.readouterr().out.strip().split(", ")
    assert fields[0] == "inpaint"
    assert float(fields[1]) > 0  # psnr
    assert int(fields[3]) == 3
    with open(trace, newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["iter", "psnr_db", "fidelity", "var_eg"]
    assert len(rows) == 4
    assert pgm.load_pgm(out).shape == (32, 32)


def test_restore_deblur_accepts_spec_or_file(tmp_path, truth_image, capsys):
    path, _ = truth_image
    deg = tmp_path / "deg.pgm"
    run(["degrade", "--task", "deblur", "--kernel", "uniform9", path, "--out", deg])
    out1, out2 = tmp_path / "r1.pgm", tmp_path / "r2.pgm"
    rc1 = run(["restore", "--task", "deblur", deg, "--kernel", tmp_path / "deg.kernel.txt",
               "--out", out1] + small_solver_flags())
    rc2 = run(["restore", "--task", "deblur", deg, "--kernel", "uniform9",
               "--out", out2] + small_solver_flags())
    assert rc1 == rc2 == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_restore_cs_from_measurements(tmp_path, capsys):
    img = np.zeros((32, 32))
    img[::2] = 150.0
    src = tmp_path / "t.pgm"
    pgm.save_pgm(img, src)
    meas = tmp_path / "m.gsrm"
    run(["degrade", "--task", "cs", "--ratio", "0.9", "--seed", "2", src, "--out", meas])
    out = tmp_path / "r.pgm"
    rc = run(["restore", "--task", "cs", meas, "--ground-truth", src, "--out", out] + small_solver_flags())
    assert rc == 0
    assert pgm.load_pgm(out).shape == (32, 32)


def test_restore_soft_thresholding_differs(tmp_path, truth_image):
    path, _ = truth_image
    deg = tmp_path / "deg.pgm"
    run(["degrade", "--task", "inpaint", "--fraction", "0.8", "--seed", "3", path, "--out", deg])
    outs = {}
    for mode in ("hard", "soft"):
        outs[mode] = tmp_path / f"{mode}.pgm"
        rc = run(["restore", "--task", "inpaint", deg, "--mask", tmp_path / "deg.mask.pgm",
                  "--thresholding", mode, "--warm-start", "0",
                  "--out", outs[mode]] + small_solver_flags())
        assert rc == 0
    assert outs["hard"].read_bytes() != outs["soft"].read_bytes()


def test_restore_missing_mask_fails(tmp_path, truth_image, capsys):
    path, _ = truth_image
    out = tmp_path / "r.pgm"
    rc = run(["restore", "--task", "inpaint", path, "--out", out])
    assert rc == 1
    assert not out.exists()
    assert "mask" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# config file precedence


def test_config_file_overrides_defaults_and_flags_win(tmp_path, truth_image):
    path, _ = truth_image
    deg = tmp_path / "deg.pgm"
    run(["degrade", "--task", "inpaint", "--fraction", "0.8", "--seed", "3", path, "--out", deg])
    conf = tmp_path / "gsr.conf"
    conf.write_text("iters = 2  # fast\nc = 16\n")
    out_conf = tmp_path / "rc.pgm"
    trace1 = tmp_path / "t1.csv"
    assert run(["restore", "--task", "inpaint", deg, "--mask", tmp_path / "deg.mask.pgm",
                "--config", conf, "--out", out_conf, "--trace", trace1]) == 0
    with open(trace1, newline="") as f:
        assert len(list(csv.reader(f))) == 3  # header + 2 iterations from config

    trace2 = tmp_path / "t2.csv"
    out_flag = tmp_path / "rf.pgm"
    assert run(["restore", "--task", "inpaint", deg, "--mask", tmp_path / "deg.mask.pgm",
                "--config", conf, "--iters", "1", "--out", out_flag, "--trace", trace2]) == 0
    with open(trace2, newline="") as f:
        assert len(list(csv.reader(f))) == 2  # flag beats config


def test_config_file_rejects_malformed_line(tmp_path):
    conf = tmp_path / "bad.conf"
    conf.write_text("this is not a setting\n")
    with pytest.raises(ValueError):
        cli.load_config_file(conf)


# ---------------------------------------------------------------------------
# sweep


def test_sweep_lambda_writes_csv(tmp_path, truth_image):
    path, _ = truth_image
    deg = tmp_path / "deg.pgm"
    run(["degrade", "--task", "inpaint", "--fraction", "0.8", "--seed", "3", path, "--out", deg])
    out = tmp_path / "sweep.csv"
    rc = run(["sweep", "--task", "inpaint", deg, "--mask", tmp_path / "deg.mask.pgm",
              "--ground-truth", path, "--param", "lambda", "--values", "0.05,0.2",
              "--out", out] + small_solver_flags())
    assert rc == 0
    with open(out, newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["param", "value", "psnr_db", "isnr_db"]
    assert [r[0] for r in rows[1:]] == ["lambda", "lambda"]
    assert [float(r[1]) for r in rows[1:]] == [0.05, 0.2]


def test_sweep_rejects_unknown_param(tmp_path, truth_image, capsys):
    path, _ = truth_image
    out = tmp_path / "s.csv"
    rc = run(["sweep", "--task", "inpaint", path, "--mask", path, "--ground-truth", path,
              "--param", "mu", "--values", "1", "--out", out])
    assert rc == 1
    assert not out.exists()
