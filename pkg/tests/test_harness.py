import textwrap
from pathlib import Path

import numpy as np
import pytest

from d2dcache import cli
from d2dcache.harness import (ConfigError, allocation_csv, compute_regret, cosine, load_config,
                              metrics_csv, parse_config, run_experiment, run_replication)

ROOT = Path(__file__).resolve().parents[1]

SMALL = textwrap.dedent("""\
    schema_version: 1
    seed: 3
    horizon: 150
    replications: 2
    catalog_size: 20
    capacities: 2
    network:
      device_count: 4
      cell_size_m: 600
      range_m: 500
      cost_bands: [[100, 2], [300, 5], [400, 7], [500, 9]]
      bs_cost: 10
    workload:
      kind: zipf_iid
      zipf_exponent: 0.9
    policies:
      - {name: DOCP, schedule: constant_T}
      - {name: mLRU}
      - {name: lazyLRU}
    snapshots: [10]
    message_log: true
    """)


def test_regret_examples():
    assert compute_regret([10, 10], [10, 0]).tolist() == [0.0, 10.0]
    assert compute_regret([0, 0, 0], [0, 0, 0]).tolist() == [0.0, 0.0, 0.0]
    with pytest.raises(ValueError):
        compute_regret([1, 2], [1])


def test_cosine():
    assert cosine([1, 0], [2, 0]) == pytest.approx(1.0)
    assert cosine([1, 0], [0, 1]) == pytest.approx(0.0)
    assert np.isnan(cosine([0, 0], [1, 1]))


def test_cell_config_loads():
    cfg = load_config(ROOT / "configs" / "cell8.yaml")
    assert cfg.horizon == 4000 and cfg.replications == 10
    net = cfg.build_network(0)
    assert net.device_count == 8 and net.catalog_size == 100


@pytest.mark.parametrize("bad, line, needle", [
    (SMALL.replace("horizon: 150", "horizon: -4"), 3, "horizon"),
    (SMALL.replace("kind: zipf_iid", "kind: bursty"), 13, "workload"),
    (SMALL.replace("{name: mLRU}", "{name: FIFO}"), 18, "unknown policy"),
    (SMALL.replace("bs_cost: 10", "bs_cost: 8"), 7, "network"),
    (SMALL.replace("schema_version: 1", "schema_version: 2"), 1, "schema_version"),
    (SMALL.replace("  range_m: 500\n", ""), 7, "range_m"),
])
def test_config_errors_carry_line_numbers(bad, line, needle):
    with pytest.raises(ConfigError) as e:
        parse_config(bad, "x.yaml")
    msg = str(e.value)
    assert msg.startswith(f"x.yaml:{line}:"), msg
    assert needle in msg


def test_cold_start_single_slot():
    text = textwrap.dedent("""\
        schema_version: 1
        horizon: 1
        catalog_size: 3
        capacities: 1
        network:
          positions: [[0, 0]]
          range_m: 500
          cost_bands: [[500, 2]]
          bs_cost: 10
        workload: {kind: zipf_iid}
        policies: [{name: DOCP, init: zeros}]
        """)
    m = run_replication(parse_config(text))
    assert m.policies["DOCP"].costs.tolist() == [10.0]
    assert m.hindsight_costs.tolist() == [0.0]
    assert m.policies["DOCP"].final_regret == 10.0


def test_same_seed_same_bytes(tmp_path):
    cfg = parse_config(SMALL)
    run_experiment(cfg, tmp_path / "a")
    run_experiment(cfg, tmp_path / "b")
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names == ["allocation_rep0.csv", "allocation_rep1.csv", "messages_rep0.txt",
                     "messages_rep1.txt", "metrics_rep0.csv", "metrics_rep1.csv", "summary.csv"]
    for n in names:
        assert (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes()


def test_outputs_are_consistent():
    m = run_replication(parse_config(SMALL))
    rows = metrics_csv(m).splitlines()
    assert rows[0] == "slot,policy,cost,running_avg,regret"
    assert len(rows) == 1 + 4 * 150
    last = [r.split(",") for r in rows if r.startswith("150,DOCP,")][0]
    assert float(last[4]) == pytest.approx(m.policies["DOCP"].final_regret)
    alloc = allocation_csv(m).splitlines()
    assert alloc[0] == "slot,file,policy,total_fraction"
    assert {r.split(",")[0] for r in alloc[1:]} == {"10", "150"}
    for s in m.policies.values():
        assert np.sum(s.costs) - m.hindsight.cost == pytest.approx(s.final_regret)
    # every DOCP snapshot respects the aggregate capacity
    assert all(a.sum() <= 4 * 2 + 1e-9 for a in m.policies["DOCP"].allocations.values())


def test_cli_round_trip(tmp_path, capsys):
    cfg = tmp_path / "small.yaml"
    cfg.write_text(SMALL)
    assert cli.main(["validate-config", str(cfg)]) == 0
    assert cli.main(["generate-trace", str(cfg), str(tmp_path / "trace.csv")]) == 0
    lines = (tmp_path / "trace.csv").read_text().splitlines()
    assert len(lines) == 150 and lines[0].count(",") == 2
    assert cli.main(["hindsight", str(cfg), str(tmp_path / "trace.csv"), str(tmp_path / "y.csv")]) == 0
    y = (tmp_path / "y.csv").read_text().splitlines()
    assert y[0] == "device,file,fraction" and len(y) == 1 + 4 * 20
    assert cli.main(["run", str(cfg), str(tmp_path / "out"), "--replications", "1"]) == 0
    msgs = (tmp_path / "out" / "messages_rep0.txt").read_text().splitlines()
    assert msgs[0] == "slot,from,to,file,beta"
    assert all(len(r.split(",")) == 5 for r in msgs[1:])
    assert "rep 0" in capsys.readouterr().out


def test_cli_errors_exit_nonzero(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text(SMALL.replace("horizon: 150", "horizon: zero"))
    assert cli.main(["validate-config", str(bad)]) == 2
    assert "bad.yaml:3:" in capsys.readouterr().err
    assert cli.main(["validate-config", str(tmp_path / "missing.yaml")]) == 2
