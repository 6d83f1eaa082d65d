import numpy as np

from lib.starframe.models import StarElement
from lib.starframe.star_core import from_generator, make_generator, make_grid


def random_kernel_element(n=12, d=2, seed=0, scale=0.5, with_delta=False, t_end=1.0):
    rng = np.random.default_rng(seed)
    grid = make_grid(t_end, n)
    theta = scale * (
        rng.standard_normal((n, n, d, d)) + 1j * rng.standard_normal((n, n, d, d))
    )
    theta[np.triu_indices(n, 1)] = 0
    if with_delta:
        delta = rng.standard_normal((n, d, d)) + 1j * rng.standard_normal((n, d, d))
    else:
        delta = np.zeros((n, d, d), dtype=complex)
    return StarElement(grid=grid, dim=d, delta_part=delta, theta_part=theta)


def constant_theta(n, a, t_end=1.0):
    """aΘ for a constant d×d matrix a."""
    a = np.atleast_2d(np.asarray(a, dtype=complex))
    grid = make_grid(t_end, n)
    samples = np.broadcast_to(a, (n,) + a.shape).copy()
    return from_generator(make_generator(grid, samples))
