"""Stateless counter-based random variates for the disorder field.

Every variate is a pure function of (master_seed, replica, n, x1, x2): a
64-bit key is formed by combining the words with distinct odd multipliers and
pushed through a murmur-style finalizer extended to five mix steps, giving
full avalanche.  Gaussian variates invert the normal CDF (Wichura's PPND16,
exact to double precision) on the 53-bit uniform carried by one hash word.
Rademacher variates consume single bits of a block hash keyed by the site's
diagonal coordinate, one 64-bit word per 64 lattice sites, exactly like a
counter-based generator splitting its output words.

Everything here is numba-compiled and shared verbatim by the scalar Python
API and the transfer-matrix kernels, so every consumer sees the same field.
"""

from __future__ import annotations

import numpy as np
from numba import njit

U64 = np.uint64

# combination multipliers (odd, fixed forever: part of the field definition)
C_REPLICA = U64(0x9E3779B97F4A7C15)
C_TIME = U64(0xD6E8FEB86659FD93)
C_X1 = U64(0xCA5A826395121157)
C_X2 = U64(0x2545F4914F6CDD1D)
C_DIAG = U64(0x27220A95FE000001)
C_BLOCK = U64(0x369DEA0F31A53F85)
C_SAMPLER = U64(0x8CB92BA72F3D8DD7)
DOM_OMEGA = U64(0x41595453454C4F50)
DOM_SAMPLER = U64(0x52454C504D415321)

_M1 = U64(0xFF51AFD7ED558CCD)
_M2 = U64(0xC4CEB9FE1A85EC53)
_INV_2_53 = 1.0 / 9007199254740992.0


@njit(cache=True, inline="always")
def mix64(x):
    """Finalize a 64-bit word: murmur3 fmix64 plus two extra diffusion steps."""
    x ^= x >> U64(33)
    x *= _M1
    x ^= x >> U64(33)
    x *= _M2
    x ^= x >> U64(33)
    x ^= x >> U64(29)
    x *= _M1
    x ^= x >> U64(32)
    return x


@njit(cache=True)
def field_key(master_seed, replica):
    """Per-(seed, replica) base key for the disorder field."""
    return mix64(mix64(U64(master_seed) ^ DOM_OMEGA) ^ U64(replica) * C_REPLICA)


@njit(cache=True)
def sampler_key(master_seed, replica, sampler_seed):
    """Base key for path-sampling uniforms; disjoint from the field stream."""
    k = mix64(mix64(U64(master_seed) ^ DOM_SAMPLER) ^ U64(replica) * C_REPLICA)
    return mix64(k ^ U64(sampler_seed) * C_SAMPLER)


@njit(cache=True, inline="always")
def to_unit(h):
    """Map a hash word to the open interval (0, 1) with 53-bit resolution."""
    return (np.float64(h >> U64(11)) + 0.5) * _INV_2_53


@njit(cache=True)
def sampler_uniform(key, step):
    return to_unit(mix64(key ^ U64(step) * C_TIME))


@njit(cache=True, inline="always")
def norm_ppf(p):
    """Inverse standard normal CDF (PPND16); |CDF(ppf(p)) - p| < 1e-15."""
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        num = (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r
            + 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r
            + 1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r
            + 1.3314166789178437745e2) * r + 3.3871328727963666080e0)
        den = (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r
            + 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r
            + 5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r
            + 4.2313330701600911252e1) * r + 1.0)
        return q * num / den
    r = p if q < 0.0 else 1.0 - p
    r = np.sqrt(-np.log(r))
    if r <= 5.0:
        r = r - 1.6
        num = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r
            + 2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r
            + 3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r
            + 4.63033784615654529590e0) * r + 1.42343711074968357734e0)
        den = (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r
            + 1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r
            + 6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r
            + 2.05319162663775882187e0) * r + 1.0)
    else:
        r = r - 5.0
        num = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r
            + 1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r
            + 2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r
            + 5.46378491116411436990e0) * r + 6.65790464350110377720e0)
        den = (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r
            + 1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r
            + 1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r
            + 5.99832206555887937690e-1) * r + 1.0)
    val = num / den
    return -val if q < 0.0 else val


@njit(cache=True, inline="always")
def omega_gaussian(key, n, x1, x2):
    h = mix64(key ^ U64(n) * C_TIME ^ U64(x1) * C_X1 ^ U64(x2) * C_X2)
    return norm_ppf(to_unit(h))


@njit(cache=True, inline="always")
def rademacher_block(key, n, v, block):
    """64 sign bits for the diagonal v = x1+x2, u-blocks of width 128."""
    return mix64(key ^ U64(n) * C_TIME ^ U64(v) * C_DIAG ^ U64(block) * C_BLOCK)


@njit(cache=True, inline="always")
def omega_rademacher(key, n, x1, x2):
    v = x1 + x2
    u = x1 - x2
    h = rademacher_block(key, n, v, u >> 7)
    bit = (h >> U64((u >> 1) & 63)) & U64(1)
    return 1.0 if bit else -1.0


@njit(cache=True, inline="always")
def omega_site(key, law_id, n, x1, x2):
    """law_id: 0 = gaussian, 1 = rademacher."""
    if law_id == 0:
        return omega_gaussian(key, n, x1, x2)
    return omega_rademacher(key, n, x1, x2)


@njit(cache=True)
def omega_fill(key, law_id, n, x1s, x2s, out):
    for i in range(x1s.size):
        out[i] = omega_site(key, law_id, n, x1s[i], x2s[i])
