import numpy as np
import pytest

import rotcomp as rc


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def random_real_field(grid, rng, k_band=None, decay=0.1):
    """Band-limited random real field, returned as a spectral array."""
    n = grid.n
    fh = grid.to_spectral(rng.standard_normal((n, n, n)))
    kx, ky, kz = grid.wavenumbers()
    fh = fh * np.exp(-decay * (kx**2 + ky**2 + kz**2))
    if k_band is not None:
        m = np.abs(np.fft.fftfreq(n) * n)
        mask = (
            (m[:, None, None] <= k_band)
            & (m[None, :, None] <= k_band)
            & (m[None, None, :] <= k_band)
        )
        fh = fh * mask
    # exact conjugate symmetry via a physical round trip
    return grid.to_spectral(grid.to_physical_real(fh))


def random_state(grid, rng, scale=1.0, k_band=None, decay=0.1):
    fields = [scale * random_real_field(grid, rng, k_band, decay) for _ in range(4)]
    return rc.StateW(grid, fields[0], np.stack(fields[1:]))


def state_norm(w):
    return rc.norm(w.grid, [w.rho, *w.u], "l2")


def state_diff(a, b):
    return rc.norm(a.grid, [a.rho - b.rho, *(a.u - b.u)], "l2")
