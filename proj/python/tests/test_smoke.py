"""End-to-end smoke tests for the python bindings."""

import math
import os
import tempfile

import moldiv


def test_parse_and_canonical():
    assert moldiv.parse_ok("C1CCCCC1C")
    assert not moldiv.parse_ok("C1CC")
    err = moldiv.parse_error("C1CC")
    assert err.kind == "UnclosedRing"
    assert moldiv.parse_error("CCO") is None

    ring = moldiv.canonical("C1CCCCC1")
    shifted = moldiv.canonical("C2CCCCC2")
    assert ring == shifted
    assert moldiv.canonical("C((C)C") is None


def test_scaffolds():
    assert moldiv.molecular_scaffold("C1CCCCC1C") == moldiv.molecular_scaffold("C1CCCCC1")
    assert moldiv.molecular_scaffold("CCC") == "∅"
    # Heteroatom ring collapses onto the plain carbocycle topologically.
    assert moldiv.topological_scaffold("N1CCCCC1") == moldiv.topological_scaffold("C1CCCCC1")


def test_fingerprints_and_distance():
    assert moldiv.tanimoto_distance("CCO", "CCO") == 0.0
    d = moldiv.tanimoto_distance("CCO", "C1CCCCC1")
    assert 0.0 < d <= 1.0
    assert len(moldiv.fingerprint_bits("C")) >= 1
    assert moldiv.tanimoto_distance("C1CC", "CCO") is None


def test_penalties_and_bandit_bound():
    assert moldiv.penalty_ims(24, 25) == 1.0
    assert moldiv.penalty_ims(25, 25) == 0.0
    assert math.isclose(moldiv.penalty_linear(5, 25), 0.8, abs_tol=1e-12)
    assert math.isclose(moldiv.penalty_erf(25, 25), 0.09205504278607601, abs_tol=1e-9)
    assert math.isclose(moldiv.penalty_tanh(26, 25, 3.0), 0.004945246313269536, abs_tol=1e-9)
    assert math.isclose(moldiv.klucb_solve(0.5, 2, 8, 0.0), 0.9677, abs_tol=1e-3)
    assert len(moldiv.strategies()) == 16


def test_corpus_and_oracles():
    corpus = moldiv.generate_corpus(50, seed=3)
    assert len(corpus) == 50
    assert all(moldiv.parse_ok(s) for s in corpus)
    assert corpus == moldiv.generate_corpus(50, seed=3)

    for body in corpus[:10]:
        score = moldiv.oracle_score("dense-easy", body)
        assert 0.0 <= score <= 1.0
    assert moldiv.oracle_score("dense-easy", "C1CC") == -1.0


def test_config_parsing():
    cfg = moldiv.parse_config("strategy = tanh_inf\nsteps = 7\n")
    assert cfg["strategy"] == "tanh_inf"
    assert cfg["steps"] == 7
    assert cfg["batch"] == 32  # default preserved
    try:
        moldiv.parse_config("nonsense = 1\n")
    except moldiv.ConfigError:
        pass
    else:
        raise AssertionError("expected ConfigError")


def test_train_sample_run_roundtrip():
    with tempfile.TemporaryDirectory() as tmp:
        ckpt = os.path.join(tmp, "tiny.ckpt")
        corpus = moldiv.generate_corpus(200, seed=5)
        ce = moldiv.pretrain(corpus, ckpt, epochs=2, emb=8, hidden=16, layers=1, seed=5)
        assert 0.0 < ce < math.log(15.0)

        draws = moldiv.sample(ckpt, count=20, max_tokens=20, seed=9)
        assert len(draws) == 20
        assert draws == moldiv.sample(ckpt, count=20, max_tokens=20, seed=9)

        out_dir = os.path.join(tmp, "runs")
        config = os.path.join(tmp, "arm.cfg")
        with open(config, "w", encoding="utf-8") as fh:
            fh.write(
                "steps = 3\nbatch = 4\nmax_tokens = 16\nreruns = 2\nseed = 2\n"
                f"output_dir = {out_dir}\nprior = {ckpt}\n"
            )
        summaries = moldiv.run(config)
        assert [s["seed"] for s in summaries] == [2, 3]
        for s in summaries:
            assert not s["aborted"]
            assert os.path.exists(s["csv"])
            with open(s["csv"], encoding="utf-8") as fh:
                lines = fh.read().splitlines()
            assert lines[0].startswith("step,mean_extrinsic")
            assert len(lines) == 4  # header + 3 steps


if __name__ == "__main__":
    failures = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_") and callable(fn):
            try:
                fn()
                print(f"{name}: ok")
            except AssertionError as exc:
                failures += 1
                print(f"{name}: FAILED {exc}")
    raise SystemExit(1 if failures else 0)
