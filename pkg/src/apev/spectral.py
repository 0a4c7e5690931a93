"""Sine spectral basis on [0, L] with Dirichlet ends.

States live as coefficient vectors against the orthonormal modes
phi_k(x) = sqrt(2/L) sin(k pi x / L), k = 1..K, whose Laplacian eigenvalues
are lambda_k = (k pi / L)^2. Fractional-power norms weight mode k by
lambda_k^alpha; the base norm (alpha = 0) is the L2 norm, so the embedding
constant from the alpha scale back to L2 is lambda_1^(-alpha).

Collocation uses the interior nodes x_j = j L / (K+1); projection and
synthesis on those nodes are exact inverses of each other (discrete sine
orthogonality) and run through the type-1 DST.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.fft import dst

from .errors import ApevError

__all__ = ["SineBasis"]


@dataclass(frozen=True)
class SineBasis:
    K: int
    L: float = 1.0

    def __post_init__(self):
        if self.K < 1:
            raise ApevError(f"mode count K must be >= 1, got {self.K}")
        if not self.L > 0.0:
            raise ApevError(f"domain length L must be positive, got {self.L}")

    @cached_property
    def lambdas(self) -> np.ndarray:
        k = np.arange(1, self.K + 1)
        return (k * math.pi / self.L) ** 2

    @cached_property
    def nodes(self) -> np.ndarray:
        j = np.arange(1, self.K + 1)
        return j * self.L / (self.K + 1)

    @cached_property
    def _scale(self) -> float:
        return math.sqrt(2.0 / self.L)

    @cached_property
    def _grad_matrix(self) -> np.ndarray:
        # G[j, k] = phi_k'(x_j)
        k = np.arange(1, self.K + 1)
        arg = np.outer(self.nodes, k) * (math.pi / self.L)
        return self._scale * (k * math.pi / self.L) * np.cos(arg)

    def project(self, node_values: np.ndarray) -> np.ndarray:
        """Node values (..., K) -> coefficients (..., K)."""
        vals = np.asarray(node_values, dtype=float)
        if vals.shape[-1] != self.K:
            raise ApevError(
                f"expected {self.K} node values, got shape {vals.shape}"
            )
        return dst(vals, type=1, axis=-1) / ((self.K + 1) * self._scale)

    def synth(self, coeffs: np.ndarray) -> np.ndarray:
        """Coefficients (..., K) -> values at the collocation nodes."""
        c = np.asarray(coeffs, dtype=float)
        if c.shape[-1] != self.K:
            raise ApevError(f"expected {self.K} coefficients, got shape {c.shape}")
        return 0.5 * self._scale * dst(c, type=1, axis=-1)

    def eval(self, coeffs: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Evaluate the expansion at arbitrary points x in [0, L]."""
        c = np.asarray(coeffs, dtype=float)
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        k = np.arange(1, self.K + 1)
        B = self._scale * np.sin(np.outer(xs, k) * (math.pi / self.L))
        out = B @ c
        return out if np.ndim(x) else out[0]

    def grad_at_nodes(self, coeffs: np.ndarray) -> np.ndarray:
        """Spatial derivative of the expansion at the collocation nodes."""
        c = np.asarray(coeffs, dtype=float)
        return c @ self._grad_matrix.T

    def alpha_norm(self, coeffs: np.ndarray, alpha: float) -> float | np.ndarray:
        """Fractional norm (sum_k lambda_k^{2 alpha} c_k^2)^{1/2}; alpha=0 is L2."""
        c = np.asarray(coeffs, dtype=float)
        w = self.lambdas ** (2.0 * alpha) if alpha != 0.0 else 1.0
        val = np.sqrt(np.sum(w * c * c, axis=-1))
        return float(val) if val.ndim == 0 else val

    def pair_alpha_norm(self, state: np.ndarray, alpha: float) -> float | np.ndarray:
        """Norm of a stacked 2K state (u_coeffs, v_coeffs): sum of the parts."""
        s = np.asarray(state, dtype=float)
        if s.shape[-1] != 2 * self.K:
            raise ApevError(
                f"expected stacked state of length {2 * self.K}, got {s.shape}"
            )
        return self.alpha_norm(s[..., : self.K], alpha) + self.alpha_norm(
            s[..., self.K :], alpha
        )

    def embedding_constant(self, alpha: float) -> float:
        """c with ||u||_{L2} <= c ||u||_alpha; sharp at the lowest mode."""
        if alpha < 0.0:
            raise ApevError(f"alpha must be >= 0, got {alpha}")
        return float(self.lambdas[0] ** (-alpha))
