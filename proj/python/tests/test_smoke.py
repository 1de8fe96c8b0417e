import math

import pytest

import causal_lab as cl


@pytest.fixture(scope="module")
def grid():
    return cl.sample_graph(
        "minkowski2d",
        "grid",
        ((-0.5, -0.5), (0.5, 0.5)),
        step=0.125,
        r_prox=0.13,
    )


def test_sampling_and_lookup(grid):
    assert grid.node_count == 81
    assert grid.model_id == "minkowski2d"
    assert not grid.cyclic()
    u = cl.nearest_node(grid, (0.0, 0.0), 1e-6)
    assert u is not None
    assert grid.position(u) == (0.0, 0.0)
    assert cl.nearest_node(grid, (7.0, 7.0), 0.5) is None


def test_graph_json_round_trip(grid):
    back = cl.CausalGraph.from_json(grid.to_json())
    assert back.node_count == grid.node_count
    assert back.edge_count == grid.edge_count
    assert back.position(3) == grid.position(3)


def test_distance_and_duality(grid):
    a = cl.nearest_node(grid, (-0.375, 0.0), 1e-6)
    b = cl.nearest_node(grid, (0.375, 0.0), 1e-6)
    d = cl.longest_path_distance(grid, a, b)
    assert d == pytest.approx(0.75, abs=1e-12)
    value, potential = cl.dual_potential(grid, a, b)
    assert value == pytest.approx(d, abs=1e-9)
    assert len(potential) == grid.node_count
    assert potential[b] - potential[a] == pytest.approx(d, abs=1e-9)


def test_surface_time_function_checks(grid):
    seed = cl.nearest_node(grid, (0.0, 0.0), 1e-6)
    future = cl.chronological_future(grid, [seed])
    assert future
    split = cl.splitting_surface(grid, future)
    assert split["reached_fixpoint"]
    assert split["residue"] == []
    f = cl.time_function(grid, split["surface"])
    assert len(f) == grid.node_count
    assert cl.check_flip(grid, f)["clean"]
    steep = cl.check_steepness(grid, f, tol=0.1)
    assert steep["reliable"] == 0  # axis-only proximity leaves too few neighbors


def test_sprinkle_respects_density():
    g = cl.sample_graph(
        "slit_minkowski",
        "sprinkle",
        ((-3.0, -2.5), (3.0, 2.5)),
        density=6.0,
        seed=5,
    )
    assert 60 <= g.node_count <= 360  # poisson around 6 * 30
    assert not g.cyclic()


def test_errors_are_typed():
    with pytest.raises(cl.CausalLabError):
        cl.sample_graph("godel", "grid", ((0.0, 0.0), (1.0, 1.0)), step=0.5)
    with pytest.raises(cl.CausalLabError):
        cl.CausalGraph.from_json("not json")


def test_run_experiment_dict():
    report, exit_code = cl.run(
        {
            "model": "minkowski2d",
            "seed": 3,
            "sample": {
                "mode": "grid",
                "window": [[-0.5, -0.5], [0.5, 0.5]],
                "step": 0.25,
            },
            "pipeline": [
                {
                    "op": "distance",
                    "name": "half",
                    "pairs": [
                        {"a": [-0.25, 0.0], "b": [0.25, 0.0], "equals": 0.5, "tol": 1e-9}
                    ],
                }
            ],
        }
    )
    assert exit_code == 0
    statuses = {c["name"]: c["status"] for c in report["checks"]}
    assert statuses["half"] == "pass"


def test_divergence_growth():
    g = cl.sample_graph(
        "singular_wedge",
        "grid",
        ((0.0, -1.05), (0.3, 1.05)),
        step=0.05,
        r_prox=0.051,
    )
    a = cl.nearest_node(g, (0.0, 0.05), 1e-6)
    b = cl.nearest_node(g, (0.0, 1.0), 1e-6)
    d = cl.longest_path_distance(g, a, b)
    assert d == pytest.approx(math.log(1.0 / 0.05), rel=0.05)
