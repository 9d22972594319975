import numpy as np
import pytest

from app.cli.config import parse_config
from app.cli.pipeline import run
from app.fem.assembly import assemble_p1
from app.mesh.triangulation import generate_dumbbell_mesh, generate_uniform_square_mesh
from app.spectra.eigensolver import solve_generalized

SQUARE_CONFIG = """
[run]
domain = unit_square
levels = {levels}
iterations = {iterations}

[clusters]
ranges = 1-1, 2-3, 4-4, 5-6

[sources]
enclosure = exact_square
ch = formula_0493h
"""


def square_config(levels='8, 16', iterations=5):
    return parse_config(SQUARE_CONFIG.format(levels=levels, iterations=iterations))


@pytest.fixture
def rng():
    return np.random.default_rng(20240617)


@pytest.fixture(scope='session')
def square16():
    return generate_uniform_square_mesh(16)


@pytest.fixture(scope='session')
def square16_system(square16):
    return assemble_p1(square16)


@pytest.fixture(scope='session')
def square16_spectrum(square16_system):
    return solve_generalized(square16_system, 11)


@pytest.fixture(scope='session')
def dumbbell_mesh():
    return generate_dumbbell_mesh()


@pytest.fixture(scope='session')
def square_study_report():
    """Full square refinement study n = 8, 16, 32, 64 with four clusters."""
    return run(square_config('8, 16, 32, 64'))


@pytest.fixture
def make_square_config():
    return square_config


@pytest.fixture
def square_config_text():
    return SQUARE_CONFIG.format
