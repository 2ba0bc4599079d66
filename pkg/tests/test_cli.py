import numpy as np
import pytest

from catwalkrank.cli import main
from catwalkrank.features import read_descriptor_dump
from catwalkrank.gmm import load_gmm
from catwalkrank.rank import load_rank
from catwalkrank.reduction import save_pca, fit_pca
from catwalkrank.sfv import load_encoded


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli_ds")
    rc = main([
        "synth", "--out", str(root), "--years", "2", "--participants", "3",
        "--frames", "5", "--noise", "0", "--seed", "3",
    ])
    assert rc == 0
    return root


def test_synth_tree(dataset, capsys):
    assert sorted(p.name for p in dataset.iterdir()) == ["2001", "2002"]
    assert (dataset / "2002" / "p002" / "frames" / "0004.pgm").is_file()


def test_extract_writes_dumps(dataset, tmp_path):
    out = tmp_path / "desc"
    assert main(["extract", "--data", str(dataset), "--out", str(out)]) == 0
    files = sorted(out.rglob("*.desc"))
    assert [str(f.relative_to(out)) for f in files] == [
        f"{y}/p{i:03d}.desc" for y in (2001, 2002) for i in range(3)
    ]
    dset = read_descriptor_dump(files[0])
    assert dset.n_frames == 4  # 5 frames give 4 usable ones
    assert dset.descriptors.shape[1] == 14


def test_fv_modular_chain(dataset, tmp_path, capsys):
    gmm = tmp_path / "voc.gmm"
    enc = tmp_path / "enc"
    model = tmp_path / "judge.rank"
    report = tmp_path / "report.csv"
    assert main(["train-gmm", "--data", str(dataset), "--out", str(gmm),
                 "--k", "2", "--max-iter", "10"]) == 0
    assert load_gmm(gmm).n_components == 2
    assert gmm.read_text().splitlines()[0] == "GMM v1 2 14"

    assert main(["encode", "--data", str(dataset), "--out", str(enc),
                 "--method", "fv", "--gmm", str(gmm)]) == 0
    one = load_encoded(enc / "2001" / "p000.enc")
    assert one.method == "FV" and one.vector.size == 2 * 14 * 2

    assert main(["train-rank", "--data", str(dataset), "--encodings", str(enc),
                 "--out", str(model), "--c", "1.0"]) == 0
    assert load_rank(model).dim == one.vector.size

    assert main(["evaluate", "--data", str(dataset), "--encodings", str(enc),
                 "--model", str(model), "--out", str(report)]) == 0
    lines = report.read_text().splitlines()
    assert lines[0] == "year,ndcg,kendall,C,D,winner_predicted_rank"
    assert len(lines) == 4 and lines[-1].startswith("average,")
    out = capsys.readouterr().out
    assert "mean NDCG" in out


def test_sfv_encode_with_saved_models(dataset, tmp_path):
    gmm = tmp_path / "voc.gmm"
    assert main(["train-gmm", "--data", str(dataset), "--out", str(gmm),
                 "--k", "2", "--max-iter", "10"]) == 0

    # the stacked route loads a saved reducer and second vocabulary
    from catwalkrank.features import extract_descriptors
    from catwalkrank.gmm import GmmFitConfig, fit_gmm, save_gmm
    from catwalkrank.ingest import iter_dataset
    from catwalkrank.reduction import project
    from catwalkrank.sfv import SfvConfig, layer1_fvs

    model1 = load_gmm(gmm)
    scfg = SfvConfig(window=3, stride=1)
    first = []
    for _, _, video, _ in iter_dataset(dataset):
        fvs = layer1_fvs(extract_descriptors(video), model1, scfg)
        first.extend(fv.values for fv in fvs if not fv.degenerate)
    pca = fit_pca(np.stack(first), energy=0.9)
    pca_path = tmp_path / "layer.pca"
    save_pca(pca, pca_path)
    gmm2 = fit_gmm(project(pca, np.stack(first)), GmmFitConfig(n_components=2, max_iterations=10))
    gmm2_path = tmp_path / "voc2.gmm"
    save_gmm(gmm2, gmm2_path)

    enc = tmp_path / "enc"
    assert main(["encode", "--data", str(dataset), "--out", str(enc),
                 "--method", "sfv-pca", "--gmm", str(gmm),
                 "--reducer", str(pca_path), "--gmm2", str(gmm2_path),
                 "--window", "3"]) == 0
    one = load_encoded(enc / "2001" / "p001.enc")
    assert one.method == "SFV-PCA" and one.vector.size == 2 * pca.output_dim * 2


def test_encode_missing_model_files(dataset, tmp_path, capsys):
    gmm = tmp_path / "voc.gmm"
    assert main(["train-gmm", "--data", str(dataset), "--out", str(gmm),
                 "--k", "2", "--max-iter", "5"]) == 0
    rc = main(["encode", "--data", str(dataset), "--out", str(tmp_path / "e"),
               "--method", "sfv-pca", "--gmm", str(gmm),
               "--reducer", "nope.pca", "--gmm2", str(gmm)])
    assert rc == 1
    assert "error: missing model: nope.pca" in capsys.readouterr().err
    rc = main(["evaluate", "--data", str(dataset), "--encodings", str(tmp_path),
               "--model", str(tmp_path / "absent.rank"), "--out", str(tmp_path / "r.csv")])
    assert rc == 1
    assert "missing model" in capsys.readouterr().err


def test_unknown_and_missing_flags_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["synth", "--out", "x", "--bogus", "1"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["synth"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
    capsys.readouterr()


def test_config_file_overrides_flags(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "# config wins over the command line\n"
        "participants = 4\n"
        "frames=4  # inline comment\n"
        "\n"
    )
    out = tmp_path / "ds"
    rc = main(["synth", "--out", str(out), "--years", "1", "--participants", "2",
               "--frames", "8", "--config", str(cfg)])
    assert rc == 0
    pids = sorted(p.name for p in (out / "2001").iterdir() if p.is_dir())
    assert pids == ["p000", "p001", "p002", "p003"]
    frames = list((out / "2001" / "p000" / "frames").iterdir())
    assert len(frames) == 4


def test_config_rejects_unknown_keys(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("volume=11\n")
    rc = main(["synth", "--out", str(tmp_path / "d"), "--config", str(cfg)])
    assert rc == 1
    assert "unknown config key 'volume'" in capsys.readouterr().err

    cfg.write_text("years=abc\n")
    rc = main(["synth", "--out", str(tmp_path / "d"), "--config", str(cfg)])
    assert rc == 1
    assert "bad value" in capsys.readouterr().err

    cfg.write_text("deterministic=maybe\n")
    rc = main(["synth", "--out", str(tmp_path / "d"), "--config", str(cfg)])
    assert rc == 1
    assert "bad boolean" in capsys.readouterr().err

    cfg.write_text("just some words\n")
    rc = main(["synth", "--out", str(tmp_path / "d"), "--config", str(cfg)])
    assert rc == 1
    assert "expected key=value" in capsys.readouterr().err


def test_train_gmm_year_filter(dataset, tmp_path, capsys):
    one = tmp_path / "one_year.gmm"
    both = tmp_path / "both_years.gmm"
    assert main(["train-gmm", "--data", str(dataset), "--out", str(one),
                 "--k", "2", "--max-iter", "5", "--years", "2001"]) == 0
    assert main(["train-gmm", "--data", str(dataset), "--out", str(both),
                 "--k", "2", "--max-iter", "5"]) == 0
    # the filter changes the training pool, so the fits must differ
    assert not np.array_equal(load_gmm(one).means, load_gmm(both).means)
    capsys.readouterr()
    rc = main(["train-gmm", "--data", str(dataset), "--out", str(one),
               "--k", "2", "--years", "1995"])
    assert rc == 1
    assert "not present" in capsys.readouterr().err


def test_loyo_cli_is_deterministic(dataset, tmp_path):
    args = ["loyo", "--data", str(dataset), "--k", "2", "--k2", "2",
            "--window", "3", "--max-iter", "8", "--seed", "5"]
    r1, r2, r3 = (tmp_path / n for n in ("r1.csv", "r2.csv", "r3.csv"))
    assert main(args + ["--out", str(r1)]) == 0
    assert main(args + ["--out", str(r2)]) == 0
    assert main(args + ["--out", str(r3), "--parallel-folds", "2"]) == 0
    assert r1.read_bytes() == r2.read_bytes() == r3.read_bytes()
    lines = r1.read_text().splitlines()
    assert lines[0] == "year,ndcg,kendall,C,D,winner_predicted_rank"
    assert [ln.split(",")[0] for ln in lines[1:]] == ["2001", "2002", "average"]
