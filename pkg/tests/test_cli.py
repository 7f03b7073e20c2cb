import json
import math
import subprocess
import sys

import numpy as np
import pytest

from blockfuse.cli import main
from blockfuse.fusion import parse_sweep_csv
from blockfuse.image import encode_pgm, load_image, save_image
from blockfuse.synth import make_candidate_set


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("set")
    assert main(["synth", "--seed", "3", "--n", "3", "--width", "64", "--height", "64",
                 "--out-dir", str(d)]) == 0
    return d


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_metrics_identical(capsys, synth_dir):
    code, out, _ = run(capsys, "metrics", synth_dir / "gt.pgm", synth_dir / "gt.pgm")
    assert code == 0
    header, row = out.strip().splitlines()
    assert header == "psnr,ssim,ms_ssim,correlation,intersection,chi_square,bhattacharyya"
    assert row == "inf,1,1,1,1,0,0"


def test_metrics_json_and_loss(capsys, synth_dir):
    code, out, _ = run(capsys, "metrics", synth_dir / "gt.pgm", synth_dir / "cand_0.pgm",
                       "--format", "json", "--loss")
    assert code == 0
    d = json.loads(out)
    assert 0 < d["mixed_loss"] < 1 and 0 < d["ms_ssim"] < 1


def test_metrics_dimension_mismatch(capsys, tmp_path):
    save_image(np.zeros((8, 8)), tmp_path / "a.pgm")
    save_image(np.zeros((8, 6)), tmp_path / "b.pgm")
    code, _, err = run(capsys, "metrics", tmp_path / "a.pgm", tmp_path / "b.pgm")
    assert code == 2
    assert "8x8" in err and "6x8" in err


def test_metrics_missing_file(capsys, tmp_path):
    code, _, err = run(capsys, "metrics", tmp_path / "nope.pgm", tmp_path / "nope.pgm")
    assert code == 1 and "error" in err


def test_fuse_perfect_candidate_byte_identical(capsys, synth_dir, tmp_path):
    out, win = tmp_path / "f.pgm", tmp_path / "w.json"
    code, stdout, _ = run(capsys, "fuse", synth_dir / "gt.pgm", synth_dir / "gt.pgm",
                          synth_dir / "cand_1.pgm", "-M", 8, "--out", out, "--winners", win)
    assert code == 0
    assert out.read_bytes() == (synth_dir / "gt.pgm").read_bytes()
    d = json.loads(win.read_text())
    assert len(d["winners"]) == (64 // 8) * (64 // 8)
    assert set(d["winners"]) == {0}
    assert stdout.strip().splitlines()[1].startswith("inf,")


def test_fuse_deterministic_and_winner_image(capsys, synth_dir, tmp_path):
    cands = [synth_dir / f"cand_{k}.pgm" for k in range(3)]
    outs = []
    for tag in "ab":
        f, w, v = tmp_path / f"f{tag}.pgm", tmp_path / f"w{tag}.json", tmp_path / f"v{tag}.pgm"
        assert run(capsys, "fuse", synth_dir / "gt.pgm", *cands, "--block", 16, "--out", f,
                   "--winners", w, "--winner-image", v)[0] == 0
        outs.append((f.read_bytes(), w.read_bytes(), v.read_bytes()))
    assert outs[0] == outs[1]
    assert load_image(tmp_path / "va.pgm").shape == (64, 64)


def test_fuse_indivisible_block_writes_nothing(capsys, synth_dir, tmp_path):
    out, win = tmp_path / "f.pgm", tmp_path / "w.json"
    code, _, err = run(capsys, "fuse", synth_dir / "gt.pgm", synth_dir / "cand_0.pgm",
                       "-M", 24, "--out", out, "--winners", win)
    assert code == 2 and "24" in err
    assert not out.exists() and not win.exists()
    assert list(tmp_path.iterdir()) == []


def test_fuse_depth_follows_gt(capsys, tmp_path):
    gt, cands = make_candidate_set(1, 2, 32, 32)
    (tmp_path / "gt.pgm").write_bytes(encode_pgm(gt, 8))
    (tmp_path / "c.pgm").write_bytes(encode_pgm(cands[0], 16))
    out = tmp_path / "f.pgm"
    assert run(capsys, "fuse", tmp_path / "gt.pgm", tmp_path / "c.pgm", "-M", 16,
               "--out", out, "--winners", tmp_path / "w.json")[0] == 0
    assert out.read_bytes().startswith(b"P5\n32 32\n255\n")


def test_sweep_default_sizes_on_256(capsys, tmp_path):
    gt = np.full((256, 256), 0.5)
    gt[::3, ::5] = 0.2
    save_image(gt, tmp_path / "gt.pgm")
    out = tmp_path / "s.csv"
    code, _, err = run(capsys, "sweep", tmp_path / "gt.pgm", tmp_path / "gt.pgm", "--out", out)
    assert code == 0
    rows = parse_sweep_csv(out.read_text())
    assert [r["block_size"] for r in rows] == [4, 8, 16, 32, 64, 128, 256]
    assert len(out.read_text().splitlines()[0].split(",")) == 15
    for r in rows:
        assert r["psnr"] == math.inf and r["ms_ssim"] == 1.0 and r["chi_square"] == 0.0
    assert "infinite PSNR" in err


def test_sweep_dataset_threads_identical(capsys, tmp_path):
    root = tmp_path / "data"
    for s in range(3):
        assert main(["synth", "--seed", str(s), "--width", "64", "--height", "64",
                     "--out-dir", str(root / f"item{s}")]) == 0
    texts = []
    for threads in (1, 4):
        out = tmp_path / f"s{threads}.csv"
        assert run(capsys, "sweep", "--dataset", root, "--blocks", "8,16,64",
                   "--threads", threads, "--out", out)[0] == 0
        texts.append(out.read_bytes())
    assert texts[0] == texts[1]
    rows = parse_sweep_csv(texts[0].decode())
    assert [r["block_size"] for r in rows] == [8, 16, 64]
    assert all(r["ms_ssim_std"] > 0 for r in rows)


def test_sweep_json(capsys, synth_dir):
    code, out, _ = run(capsys, "sweep", synth_dir / "gt.pgm", synth_dir / "cand_0.pgm",
                       "--blocks", "16,32", "--format", "json")
    assert code == 0
    d = json.loads(out)
    assert [r["block_size"] for r in d] == [16, 32]


def test_sweep_usage_errors(capsys, synth_dir):
    assert run(capsys, "sweep", synth_dir / "gt.pgm")[0] == 2
    assert run(capsys, "sweep", "--dataset", synth_dir / "missing")[0] == 1


def _scores(tmp_path, rows):
    p = tmp_path / "scores.csv"
    p.write_text("label,score\n" + "".join(f"{y},{s}\n" for y, s in rows))
    return p


def test_classify_eval_perfect(capsys, tmp_path):
    p = _scores(tmp_path, [(0, 0.1), (0, 0.2), (1, 0.8), (1, 0.9)])
    code, out, _ = run(capsys, "classify-eval", p)
    assert code == 0
    header, row = out.strip().splitlines()
    assert header.split(",")[:3] == ["accuracy", "auroc", "auprc"]
    assert row.split(",")[:7] == ["1"] * 7


def test_classify_eval_inverted_json(capsys, tmp_path):
    p = _scores(tmp_path, [(1, 0.1), (1, 0.2), (0, 0.8), (0, 0.9)])
    code, out, _ = run(capsys, "classify-eval", p, "--format", "json")
    d = json.loads(out)
    assert code == 0 and d["auroc"] == 0.0 and d["mcc"] == -1.0


def test_classify_eval_single_class(capsys, tmp_path):
    p = _scores(tmp_path, [(1, 0.1), (1, 0.7)])
    code, _, err = run(capsys, "classify-eval", p)
    assert code == 3 and "positive and negative" in err


def _groups(tmp_path, groups):
    p = tmp_path / "groups.csv"
    p.write_text("group,value\n" + "".join(f"{n},{v}\n" for n, vals in groups.items()
                                             for v in vals))
    return p


def test_stats_hand_case(capsys, tmp_path):
    p = _groups(tmp_path, {"a": [1, 2, 3], "b": [2, 3, 4], "c": [3, 4, 5]})
    out_json = tmp_path / "r.json"
    code, out, _ = run(capsys, "stats", p, "--out", out_json)
    assert code == 0
    assert out.strip() == "F(2, 6)=3.000, p=0.125"
    report = json.loads(out_json.read_text())
    assert set(report) >= {"anova", "levene", "tukey"}
    assert report["anova"]["df_between"] == 2 and len(report["tukey"]) == 3


def test_stats_identical_groups(capsys, tmp_path):
    p = _groups(tmp_path, {"a": [1, 2, 3], "b": [1, 2, 3]})
    code, out, _ = run(capsys, "stats", p)
    assert code == 0
    assert out.splitlines()[0] == "F(1, 4)=0.000, p=1.000"


def test_stats_degenerate(capsys, tmp_path):
    p = _groups(tmp_path, {"a": [1, 1], "b": [1, 1]})
    out_json = tmp_path / "r.json"
    code, _, _ = run(capsys, "stats", p, "--out", out_json)
    assert code == 3 and not out_json.exists()


def test_synth_outputs(capsys, tmp_path):
    dirs = [tmp_path / "a", tmp_path / "b"]
    for d in dirs:
        assert main(["synth", "--seed", "42", "--n", "2", "--width", "32", "--height", "48",
                     "--out-dir", str(d)]) == 0
    names = sorted(p.name for p in dirs[0].iterdir())
    assert names == ["cand_0.pgm", "cand_1.pgm", "gt.pgm", "manifest.json"]
    for name in names:
        assert (dirs[0] / name).read_bytes() == (dirs[1] / name).read_bytes()
    manifest = json.loads((dirs[0] / "manifest.json").read_text())
    assert manifest["seed"] == 42 and len(manifest["candidates"]) == 2
    assert load_image(dirs[0] / "gt.pgm").shape == (48, 32)


def test_synth_unwritable(capsys, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code, _, _ = run(capsys, "synth", "--out-dir", blocker / "sub", "--width", 16, "--height", 16)
    assert code == 1


def test_degrade_subcommand(capsys, synth_dir, tmp_path):
    out = tmp_path / "d.pgm"
    code, _, _ = run(capsys, "degrade", synth_dir / "gt.pgm", out, "--noise-sigma", 0.05,
                     "--region", "0,0,32,64")
    assert code == 0
    gt, img = load_image(synth_dir / "gt.pgm"), load_image(out)
    np.testing.assert_array_equal(img[:, 32:], gt[:, 32:])


def test_bad_flag_values(capsys, synth_dir):
    with pytest.raises(SystemExit) as exc:
        main(["metrics", str(synth_dir / "gt.pgm"), str(synth_dir / "gt.pgm"), "--omega", "1.5"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit):
        main(["sweep", "--blocks", "4,-8"])


def test_module_entry_point(synth_dir):
    res = subprocess.run([sys.executable, "-m", "blockfuse", "metrics", str(synth_dir / "gt.pgm"),
                          str(synth_dir / "gt.pgm")], capture_output=True, text=True)
    assert res.returncode == 0
    assert res.stdout.splitlines()[1] == "inf,1,1,1,1,0,0"
