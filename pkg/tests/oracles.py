"""Independent oracles used by the tests.

Everything here is derived from first principles with plain numpy/scipy so
the package under test never supplies its own expected values.
"""

import numpy as np
from scipy.integrate import quad


def interferometer_2x2(phi: float) -> np.ndarray:
    """Single-photon map (rows e, f; columns a, b) built step by step.

    Chain: symmetric 50:50 splitter, +phi/2 on one arm, -phi/2 on the other,
    symmetric 50:50 splitter.  Written out with literal 2x2 matrices.
    """
    t = 1.0 / np.sqrt(2.0)
    bs = np.array([[t, 1j * t], [1j * t, t]])
    arms = np.diag([np.exp(1j * phi / 2.0), np.exp(-1j * phi / 2.0)])
    return bs @ arms @ bs


def two_photon_coincidence(phi: float, gamma: float) -> float:
    """Coincidence probability for one photon in each input port.

    Enumerates the two amplitude paths that leave one photon per output.
    With overlap gamma the outcomes interpolate between the distinguishable
    sum of squared magnitudes and the fully interfering squared sum.
    """
    u = interferometer_2x2(phi)
    amp_keep = u[0, 0] * u[1, 1]  # a -> e together with b -> f
    amp_swap = u[0, 1] * u[1, 0]  # a -> f together with b -> e
    p_dist = abs(amp_keep) ** 2 + abs(amp_swap) ** 2
    p_indist = abs(amp_keep + amp_swap) ** 2
    return float((1.0 - gamma ** 2) * p_dist + gamma ** 2 * p_indist)


def gaussian_overlap_quadrature(sigma_1: float, sigma_2: float,
                                delta_nu: float, tau: float) -> float:
    """|integral f1*(nu) f2(nu) exp(2 pi i nu tau) dnu| for two normalized
    Gaussian amplitude spectra, evaluated numerically."""

    def spectrum(nu, center, sigma):
        return (2.0 * np.pi * sigma ** 2) ** -0.25 * np.exp(
            -(nu - center) ** 2 / (4.0 * sigma ** 2))

    span = 8.0 * max(sigma_1, sigma_2) + abs(delta_nu)

    def integrand_re(nu):
        z = spectrum(nu, 0.0, sigma_1) * spectrum(nu, delta_nu, sigma_2)
        return z * np.cos(2.0 * np.pi * nu * tau)

    def integrand_im(nu):
        z = spectrum(nu, 0.0, sigma_1) * spectrum(nu, delta_nu, sigma_2)
        return z * np.sin(2.0 * np.pi * nu * tau)

    re, _ = quad(integrand_re, -span, span + abs(delta_nu), limit=400)
    im, _ = quad(integrand_im, -span, span + abs(delta_nu), limit=400)
    return float(np.hypot(re, im))


def align_global_phase(x: np.ndarray, y: np.ndarray) -> float:
    """Smallest max-amplitude deviation between x and c*y over unit phases c.

    The optimal unit phase for the max-norm is approximated by the phase
    that matches the dominant component, which is exact whenever the states
    actually are equal up to a global phase.
    """
    k = int(np.argmax(np.abs(x) + np.abs(y)))
    if abs(y[k]) == 0.0:
        return float(np.max(np.abs(x - y)))
    c = x[k] / y[k]
    if abs(c) != 0.0:
        c = c / abs(c)
    else:
        c = 1.0
    return float(np.max(np.abs(x - c * y)))
