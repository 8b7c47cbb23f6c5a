"""Shared fixtures: bundled networks, a trained screening model and small
hand-built cases."""

import json

import numpy as np
import pytest

from acdcopf import netmodel, opfcore, screen
from acdcopf.netmodel import ControlSpace, load_bundled_case, network_from_dict


@pytest.fixture(scope="session")
def acdc_net():
    return load_bundled_case("case14_acdc")


@pytest.fixture(scope="session")
def ac_net():
    return load_bundled_case("case14_ac")


@pytest.fixture(scope="session")
def acdc_space(acdc_net):
    return ControlSpace(acdc_net)


@pytest.fixture(scope="session")
def base_eval(acdc_net, acdc_space):
    return opfcore.evaluate(acdc_net, acdc_space, acdc_space.default_vector())


@pytest.fixture(scope="session")
def screening_model(acdc_net):
    sampler = screen.SamplerConfig(seed=1)
    train = screen.build_training_set(acdc_net, sampler, 60)
    return screen.fit_screening_model(acdc_net, train, seed=1)


def two_bus_case(p_d=0.5, q_d=0.0, x=0.1, r=0.0):
    """Minimal 2-bus AC case: slack feeding one PQ load over one line."""
    d = r * r + x * x
    return {
        "version": "acdc-case/1",
        "name": "two_bus",
        "base_mva": 100.0,
        "ac_buses": [
            {"id": 1, "kind": "slack", "u": 1.0, "u_min": 0.5, "u_max": 1.5,
             "a_min": 0.4, "a_max": 1.6, "h_min": 0.5, "h_max": 1.5,
             "delta_min": -1.5, "delta_max": 1.5},
            {"id": 2, "kind": "pq", "p_d": p_d, "q_d": q_d, "u_min": 0.5,
             "u_max": 1.5, "a_min": 0.4, "a_max": 1.6, "h_min": 0.5,
             "h_max": 1.5, "delta_min": -1.5, "delta_max": 1.5},
        ],
        "ac_branches": [
            {"from_bus": 1, "to_bus": 2, "g": r / d if d else 0.0,
             "b": -x / d if d else 0.0, "p_min": -99.0, "p_max": 99.0,
             "p_alarm": 99.9, "p_secure": 99.0},
        ],
        "generators": [
            {"bus": 1, "p_min": 0.0, "p_max": 10.0, "q_min": -10.0,
             "q_max": 10.0, "u_g": 1.0, "alpha": 1.0, "beta": 0.0,
             "gamma": 0.0},
        ],
        "shunts": [], "converters": [], "dc_buses": [], "dc_branches": [],
        "limits": {},
    }


@pytest.fixture
def two_bus_net():
    return network_from_dict(two_bus_case())


def radial_three_bus_case():
    """Slack - middle - leaf chain; the leaf branch outage islands a load."""
    case = two_bus_case(p_d=0.1)
    case["name"] = "radial_three_bus"
    case["ac_buses"].append(
        {"id": 3, "kind": "pq", "p_d": 0.2, "u_min": 0.5, "u_max": 1.5,
         "a_min": 0.4, "a_max": 1.6, "h_min": 0.5, "h_max": 1.5,
         "delta_min": -1.5, "delta_max": 1.5})
    case["ac_branches"].append(
        {"from_bus": 2, "to_bus": 3, "g": 0.0, "b": -10.0, "p_min": -99.0,
         "p_max": 99.0, "p_alarm": 99.9, "p_secure": 99.0})
    return case


@pytest.fixture
def radial_net():
    return network_from_dict(radial_three_bus_case())


def write_case(tmp_path, case, name="case.json"):
    path = tmp_path / name
    path.write_text(json.dumps(case))
    return path
