import json

import numpy as np
import pytest

from cavdip.atoms import AtomSpec, PhysicalConstants, TwoAtomConfig
from cavdip.green import CavityGeometry

NATURAL = PhysicalConstants(hbar=1.0, epsilon0=1.0, c=1.0)


@pytest.fixture
def natural_constants():
    return NATURAL


@pytest.fixture
def two_level_pi_atom():
    """Two-level atom with a pure pi (d0) transition, natural units."""
    d0 = np.array([0.7, 0.0, 0.0], dtype=complex)
    return AtomSpec("pi2lvl", {0: 0.0, 1: 1.0}, {(0, 1): d0})


@pytest.fixture
def desk_pair(two_level_pi_atom):
    """Both-ground pair, effectively free space (huge plate separation)."""
    geom = CavityGeometry(r=0.5, d=300.0)
    return TwoAtomConfig(two_level_pi_atom, two_level_pi_atom, 0, 0, geom,
                         NATURAL)


@pytest.fixture
def atoms_json(tmp_path):
    """Realistic SI-unit two-atom document on disk."""
    doc = {
        "atoms": [
            {
                "label": "Rb-ish",
                "levels": [
                    {"index": 0, "omega": 0.0, "unit": "rad/s"},
                    {"index": 1, "omega": 2.4e15, "unit": "rad/s"},
                ],
                "dipoles": [
                    {"from": 0, "to": 1, "d0": [2.5e-29, 0.0],
                     "dplus": [0.0, 0.0], "dminus": [0.0, 0.0]},
                ],
            },
            {
                "label": "Cs-ish",
                "levels": [
                    {"index": 0, "omega": 0.0, "unit": "rad/s"},
                    {"index": 1, "omega": 2.2e15, "unit": "rad/s"},
                ],
                "dipoles": [
                    {"from": 0, "to": 1, "d0": [2.0e-29, 0.0],
                     "dplus": [1.0e-29, 0.0], "dminus": [1.0e-29, 0.0]},
                ],
            },
        ],
        "config": {"state_a": 0, "state_b": 0, "r": 200.0, "d": 1000.0,
                   "length_unit": "nm"},
        "field": {"cartesian": [0.0, 0.0, 1.0e5]},
    }
    path = tmp_path / "atoms.json"
    path.write_text(json.dumps(doc))
    return path
