import json
import math

import numpy as np
import pytest

from sparse_active.cli import main
from sparse_active.errors import ParameterError
from sparse_active.harness import (
    CSV_COLUMNS,
    ExperimentConfig,
    estimate_error,
    expand_grid,
    make_world,
    read_csv,
    run_active,
    run_baseline_fulldim,
    run_baseline_passive,
    sweep,
    write_csv,
)
from sparse_active.solver import SolverOptions
from sparse_active.world import NoiseModel, SparseTarget, World, gaussian

FAST = SolverOptions(iterations=150)


def _small(**kw):
    base = dict(d=20, t=2, epsilon=0.1, delta=0.1, solver=FAST, seeds=(0,))
    base.update(kw)
    return ExperimentConfig(**base)


def _axis_world(d=4):
    u = np.zeros(d)
    u[0] = 1.0
    return World(gaussian(d), SparseTarget(u, (0,), 1), NoiseModel.realizable())


# error estimation


def test_exact_error_examples():
    world = _axis_world()
    assert estimate_error(world.target.u, world).estimate == 0.0
    assert estimate_error(-world.target.u, world).estimate == pytest.approx(1.0)
    w = np.array([1.0, 1.0, 0.0, 0.0])
    assert estimate_error(w, world).estimate == pytest.approx(0.25)


def test_monte_carlo_matches_exact():
    world = _axis_world()
    w = np.array([1.0, 0.7, -0.2, 0.0])
    exact = estimate_error(w, world).estimate
    mc = estimate_error(w, world, "monte_carlo", 200_000, np.random.default_rng(0))
    assert abs(mc.estimate - exact) < 4 * mc.stderr


def test_exact_error_refuses_noisy_world():
    world = World(gaussian(4), _axis_world().target, NoiseModel.bounded(0.1))
    with pytest.raises(ParameterError):
        estimate_error(world.target.u, world, "exact")


# algorithms


def test_make_world_target_depends_only_on_seed_d_t():
    a = make_world(_small(noise="bounded", noise_rate=0.2), 3)
    b = make_world(_small(epsilon=0.2), 3)
    np.testing.assert_array_equal(a.target.u, b.target.u)
    assert not np.array_equal(a.target.u, make_world(_small(), 4).target.u)


def test_active_record_fields():
    rec = run_active(_small(), 0)
    assert rec.ok
    assert rec.labels_total == sum(rec.labels_per_epoch)
    assert rec.unlabeled_total == rec.labels_total + rec.rejected_total
    assert rec.err_estimate == pytest.approx(rec.theta_final / math.pi)
    assert len(rec.theta_trace) == rec.k0 + 1


def test_passive_uses_no_rejections():
    cfg = _small(passive=True, active=False, passive_budget=500)
    rec = run_baseline_passive(cfg, 0)
    assert rec.labels_total == rec.unlabeled_total == 500
    assert rec.rejected_total == 0


def test_passive_default_budget_matches_active_total():
    cfg = _small()
    assert run_baseline_passive(cfg, 0).labels_total == run_active(cfg, 0).labels_total


@pytest.mark.slow
def test_passive_with_large_sample_is_accurate():
    cfg = ExperimentConfig(d=20, t=3, epsilon=0.05, passive_budget=100_000, solver=SolverOptions(iterations=500))
    assert run_baseline_passive(cfg, 0).err_estimate <= 0.02


def test_fulldim_returns_unit_vector():
    cfg = _small(d=10)
    rec = run_baseline_fulldim(cfg, 1)
    assert rec.ok and rec.algorithm == "fulldim"
    assert 0.0 <= rec.err_estimate <= 1.0


def test_active_with_t_equal_d_is_fulldim():
    cfg = _small(d=6, t=6)
    a, b = run_active(cfg, 2), run_baseline_fulldim(cfg, 2)
    assert a.theta_final == b.theta_final
    assert a.labels_per_epoch == b.labels_per_epoch


# sweeps and CSV


def test_single_cell_sweep_gives_one_record(tmp_path):
    out = tmp_path / "one.csv"
    records = sweep(_small(), output=out)
    assert len(records) == 1
    assert out.exists() and not (tmp_path / "one.csv.partial").exists()
    header = out.read_text().splitlines()[0].split(",")
    assert header == CSV_COLUMNS


def test_csv_round_trip(tmp_path):
    records = sweep(_small(seeds=(0, 1), passive=True))
    path = tmp_path / "r.csv"
    write_csv(records, path)
    back = read_csv(path)
    assert len(back) == len(records)
    for a, b in zip(back, records):
        for col in CSV_COLUMNS:
            x, y = getattr(a, col), getattr(b, col)
            assert x == y or (isinstance(x, float) and math.isnan(x) and math.isnan(y)), col
    again = tmp_path / "again.csv"
    write_csv(back, again)
    assert again.read_bytes() == path.read_bytes()


def test_expand_grid_with_noise_dicts():
    grid = {"d": [20, 30], "noise": [{"noise": "bounded", "noise_rate": 0.1}, {"noise": "realizable"}]}
    cells = expand_grid(_small(), grid)
    assert len(cells) == 4
    assert {(c.d, c.noise) for c in cells} == {(20, "bounded"), (30, "bounded"), (20, "realizable"), (30, "realizable")}
    assert len({c.config_hash() for c in cells}) == 4


def test_failed_cell_is_recorded_not_raised(monkeypatch):
    from sparse_active import harness

    def boom(config, seed):
        raise RuntimeError("synthetic failure")

    monkeypatch.setitem(harness._ALGORITHMS, "active", boom)
    records = sweep(_small(seeds=(0, 1)))
    assert len(records) == 2
    assert all(r.status.startswith("failed: RuntimeError") for r in records)


def test_config_hash_ignores_seeds_and_output():
    assert _small(seeds=(1, 2)).config_hash() == _small(output="x.csv").config_hash()
    assert _small().config_hash() != _small(epsilon=0.2).config_hash()


def test_config_rejects_unknown_keys_and_bad_values():
    with pytest.raises(ParameterError):
        ExperimentConfig.from_dict({"dd": 3})
    with pytest.raises(ParameterError):
        ExperimentConfig(noise="bounded", noise_rate=0.7)
    with pytest.raises(ParameterError):
        ExperimentConfig(marginal="laplace")
    with pytest.raises(ParameterError):
        ExperimentConfig(d=3, t=5)


def test_identical_seeds_reproduce_records():
    cfg = _small(seeds=(3,), noise="bounded", noise_rate=0.1)
    a, b = sweep(cfg), sweep(cfg)
    for ra, rb in zip(a, b):
        ra.wall_ms = rb.wall_ms = 0
    assert a == b


# CLI


def _write_json(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


def test_cli_run_json(tmp_path, capsys):
    cfg = _write_json(tmp_path / "c.json", {"d": 20, "t": 2, "epsilon": 0.1, "solver": {"iterations": 100}})
    out = tmp_path / "o.csv"
    assert main(["run", "--config", cfg, "--seeds", "0,1", "--out", str(out)]) == 0
    assert len(read_csv(out)) == 2


def test_cli_run_toml_with_summary(tmp_path, capsys):
    path = tmp_path / "c.toml"
    path.write_text('d = 20\nt = 2\nepsilon = 0.1\nseeds = [0]\n[solver]\niterations = 100\n')
    assert main(["run", "--config", str(path), "--summary"]) == 0
    assert "labels med" in capsys.readouterr().out


def test_cli_sweep(tmp_path):
    cfg = _write_json(
        tmp_path / "s.json",
        {"d": 20, "t": 2, "epsilon": 0.1, "solver": {"iterations": 100}, "grid": {"t": [1, 2]}},
    )
    out = tmp_path / "s.csv"
    assert main(["sweep", "--config", cfg, "--seeds", "0:2", "--out", str(out)]) == 0
    assert len(read_csv(out)) == 4


def test_cli_parameter_error_exit_code(tmp_path, capsys):
    cfg = _write_json(tmp_path / "bad.json", {"d": 20, "t": 50})
    assert main(["run", "--config", cfg]) == 1
    assert "parameter error" in capsys.readouterr().err
    cfg = _write_json(tmp_path / "nogrid.json", {"d": 20, "t": 2})
    assert main(["sweep", "--config", cfg]) == 1


def test_cli_failed_runs_exit_code(tmp_path, monkeypatch):
    from sparse_active import harness

    monkeypatch.setitem(harness._ALGORITHMS, "active", lambda c, s: 1 / 0)
    cfg = _write_json(tmp_path / "c.json", {"d": 20, "t": 2})
    assert main(["run", "--config", cfg]) == 2


def test_cli_internal_error_exit_code(tmp_path, monkeypatch):
    from sparse_active import cli

    def explode(*a, **k):
        raise RuntimeError("bug")

    monkeypatch.setattr(cli, "sweep", explode)
    cfg = _write_json(tmp_path / "c.json", {"d": 20, "t": 2})
    assert main(["run", "--config", cfg]) == 3


def test_cli_properties_small(capsys):
    assert main(["properties", "--cases", "200", "--seed", "1"]) in (0, 2)
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 9
    assert all(line.startswith(("[PASS]", "[FAIL]")) for line in lines)
