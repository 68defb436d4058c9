import json
import math

import numpy as np
import pytest

from homprog.cli import BUILTIN, builtin_config_text
from homprog.config import ConfigError, parse_config, serialize, to_dict, to_scenario
from homprog.control import WARM_START_MODES

MINIMAL = {
    "schema_version": 1,
    "kind": "consensus",
    "mpc_steps": 100,
    "agents": [{"Q": [0, 1, 0, 1], "x_ref": [0, -2, 0, 0]}, {"Q": [0, 1, 0, 1], "x_ref": [0, 0, 0, 0]},
               {"Q": [0, 1, 0, 1], "x_ref": [0, 2, 0, 0]}],
    "edges": [{"i": 0, "j": 1, "sel_i": "x_position", "sel_j": "x_position", "potential": {"kind": "quadratic"}},
              {"i": 1, "j": 2, "sel_i": "x_position", "sel_j": "x_position", "potential": {"kind": "quadratic"}}],
}


def parse(obj):
    return parse_config(json.dumps(obj))


def with_(obj=MINIMAL, **kw):
    out = json.loads(json.dumps(obj))
    out.update(kw)
    return out


@pytest.mark.parametrize("name", BUILTIN)
def test_builtin_round_trip(name):
    cfg = parse_config(builtin_config_text(name))
    again = parse_config(serialize(cfg))
    assert again == cfg
    assert serialize(again) == serialize(cfg)
    to_scenario(cfg)


def test_minimal_consensus_defaults():
    cfg = parse(MINIMAL)
    sc = to_scenario(cfg)
    assert len(sc.agents) == 3 and sc.admm.K == 10
    assert cfg.dt == 0.1 and "dt" in cfg.defaults
    assert "admm" in cfg.defaults and "initial_state" in cfg.defaults
    assert np.array_equal(sc.agents[0].R, 0.1 * np.eye(2))
    assert to_dict(cfg)["dt"] == 0.1


def test_explicit_values_are_not_reported_as_defaults():
    cfg = parse(with_(dt=0.2, admm={"rho": 3.0}))
    assert cfg.dt == 0.2 and "dt" not in cfg.defaults
    assert "admm" not in cfg.defaults and "admm.K" in cfg.defaults


def test_r_squared_binds_to_radius():
    obj = with_(edges=[{"i": 0, "j": 1, "sel_i": "position", "sel_j": "position",
                        "potential": {"kind": "fixed_distance_sq", "r_squared": 5}}])
    sc = to_scenario(parse(obj))
    assert sc.edges[0].potential.r == pytest.approx(math.sqrt(5))
    assert sc.edges[0].potential.value([1.0, 2.0]) == pytest.approx(0.0, abs=1e-12)


def test_split_potential_config():
    pot = {"kind": "split", "parts": [{"indices": [0, 1], "potential": {"kind": "fixed_distance_sq", "r": 2}},
                                      {"indices": [2, 3], "potential": {"kind": "quadratic"}}]}
    obj = with_(edges=[{"i": 0, "j": 1, "potential": pot}])
    sc = to_scenario(parse(obj))
    assert sc.edges[0].potential.dim == 4 and len(sc.edges[0].potential.parts) == 2


@pytest.mark.parametrize(
    "mutate, path",
    [
        (lambda o: o.update(colour="red"), "colour"),
        (lambda o: o["agents"][1].update(mass=2), "agents[1].mass"),
        (lambda o: o["edges"][0]["potential"].update(r=1), "edges[0].potential.r"),
        (lambda o: o.update(admm={"rho": -1}), "admm.rho"),
        (lambda o: o.update(admm={"diffusion_method": "rk4"}), "admm.diffusion_method"),
        (lambda o: o.update(kind="swarm"), "kind"),
        (lambda o: o.update(schema_version=2), "schema_version"),
        (lambda o: o.pop("mpc_steps"), "mpc_steps"),
        (lambda o: o["agents"][0].update(Q=[1, 2]), "agents[0].Q"),
        (lambda o: o["agents"][0].update(R=[[1, 0], [0, -1]]), "agents[0].R"),
        (lambda o: o["edges"][0].update(j=7), "edges[0]"),
        (lambda o: o["edges"][0].update(sel_j="position"), "edges[0]"),
        (lambda o: o.update(warm_start="dual"), "warm_start"),
        (lambda o: o.update(initial_state={"mode": "fixed", "states": [[0, 0, 0, 0]]}), "initial_state.states"),
    ],
)
def test_errors_name_the_field(mutate, path):
    obj = with_()
    mutate(obj)
    with pytest.raises(ConfigError) as exc:
        parse(obj)
    assert exc.value.path == path
    assert str(exc.value).startswith(path)


def test_fixed_distance_needs_exactly_one_radius():
    for pot in ({"kind": "fixed_distance_sq"}, {"kind": "fixed_distance_sq", "r": 1, "r_squared": 1}):
        obj = with_(edges=[{"i": 0, "j": 1, "sel_i": "position", "sel_j": "position", "potential": pot}])
        with pytest.raises(ConfigError, match="exactly one"):
            parse(obj)


def test_duplicate_edge_rejected():
    obj = with_()
    obj["edges"].append(dict(obj["edges"][0]))
    with pytest.raises(ConfigError, match="duplicate"):
        parse(obj)


def test_json_syntax_error_reports_position():
    with pytest.raises(ConfigError) as exc:
        parse_config('{"schema_version": 1,\n  "kind": }')
    assert exc.value.path == "line 2 column 11"


def test_multidomain_offsets_checked():
    obj = json.loads(builtin_config_text("multidomain"))
    obj["multidomain"]["usv_offsets"] = [[1, 0], [1, 0], [1, 0], [1, 0], [1, 0], [1, 0]]
    with pytest.raises(ConfigError, match="usv_offsets"):
        parse(obj)
    obj = json.loads(builtin_config_text("multidomain"))
    obj["agents"] = []
    with pytest.raises(ConfigError, match="generated"):
        parse(obj)


def test_fixed_initial_states_reach_scenario():
    states = [[1, 2, 0, 0], [3, 4, 0, 0], [5, 6, 0, 0]]
    sc = to_scenario(parse(with_(initial_state={"mode": "fixed", "states": states})))
    assert [s.tolist() for s in sc.draw_initial_states()] == states


def test_overrides_and_thresholds():
    cfg = parse(with_(thresholds={"x_spread": 0.05}))
    assert dict(cfg.thresholds) == {"x_spread": 0.05}
    o = cfg.with_overrides(seed=9, steps=3)
    assert (o.seed, o.mpc_steps) == (9, 3) and (cfg.seed, cfg.mpc_steps) == (0, 100)


def test_warm_start_modes_all_parse():
    for mode in WARM_START_MODES:
        assert parse(with_(warm_start=mode)).warm_start == mode
