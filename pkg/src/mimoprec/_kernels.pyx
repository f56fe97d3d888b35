# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-trial SINR kernel.

Mirrors ``mimoprec._fallback.batch_sinr`` trial by trial.  All matrices are
small (n <= MAXN), row-major and live on the stack; Hermitian positive
definite inverses go through a Cholesky factorization.
"""

from libc.math cimport sqrt

ctypedef double complex cplx

cdef enum:
    MAXN = 8
    MAXSQ = 64

# precoder / equalizer codes, see mimoprec.kernels
cdef enum:
    ZF_MIN = 0
    ZF_MAX = 1
    RZF = 2
    MF = 3
    WIENER = 4

cdef enum:
    EQ_NONE = 0
    EQ_ZF = 1
    EQ_MMSE = 2

cdef double COND_LIMIT = 1e12


cdef inline double abs2(cplx z) noexcept nogil:
    return z.real * z.real + z.imag * z.imag


cdef double norm1(const cplx* a, int n) noexcept nogil:
    cdef int i, j
    cdef double col, best = 0.0
    for j in range(n):
        col = 0.0
        for i in range(n):
            col += sqrt(abs2(a[i * n + j]))
        if col > best:
            best = col
    return best


cdef int chol_inverse(const cplx* a, cplx* out, int n) noexcept nogil:
    """Inverse of Hermitian PD ``a`` via a = L L^H; -1 on a bad pivot."""
    cdef cplx L[MAXSQ]
    cdef cplx Li[MAXSQ]
    cdef int i, j, k, k0
    cdef double d
    cdef cplx s
    for i in range(n * n):
        L[i] = 0
        Li[i] = 0
    for j in range(n):
        d = a[j * n + j].real
        for k in range(j):
            d -= abs2(L[j * n + k])
        if not (d > 0.0):
            return -1
        d = sqrt(d)
        L[j * n + j] = d
        for i in range(j + 1, n):
            s = a[i * n + j]
            for k in range(j):
                s = s - L[i * n + k] * L[j * n + k].conjugate()
            L[i * n + j] = s / d
    for j in range(n):
        Li[j * n + j] = 1.0 / L[j * n + j].real
        for i in range(j + 1, n):
            s = 0
            for k in range(j, i):
                s = s - L[i * n + k] * Li[k * n + j]
            Li[i * n + j] = s / L[i * n + i].real
    for i in range(n):
        for j in range(n):
            s = 0
            k0 = i if i > j else j
            for k in range(k0, n):
                s = s + Li[k * n + i].conjugate() * Li[k * n + j]
            out[i * n + j] = s
    return 0


cdef void water_fill(const double* w, double budget, double* p, int n) noexcept nogil:
    cdef int idx[MAXN]
    cdef int i, j, tmp, k
    cdef double acc, mu = 0.0
    for i in range(n):
        idx[i] = i
    for i in range(1, n):
        j = i
        while j > 0 and w[idx[j - 1]] > w[idx[j]]:
            tmp = idx[j]
            idx[j] = idx[j - 1]
            idx[j - 1] = tmp
            j -= 1
    k = n
    while k > 0:
        acc = budget
        for i in range(k):
            acc += w[idx[i]]
        mu = acc / k
        if mu > w[idx[k - 1]]:
            break
        k -= 1
    for i in range(n):
        p[i] = 0.0
    for i in range(k):
        p[idx[i]] = mu / w[idx[i]] - 1.0


cdef int one_trial(const cplx* h, int n, int m, int precoder, int equalizer,
                   double rho, double c, double* gamma) noexcept nogil:
    cdef cplx G[MAXSQ]
    cdef cplx Ginv[MAXSQ]
    cdef cplx R[MAXSQ]
    cdef cplx Rinv[MAXSQ]
    cdef cplx A[MAXSQ]
    cdef cplx K[MAXSQ]
    cdef double diag[MAXN]
    cdef int i, j, k
    cdef cplx s
    cdef double tr, eta, q, shift, leak, d

    for i in range(n):
        for j in range(i + 1):
            s = 0
            for k in range(m):
                s = s + h[i * m + k] * h[j * m + k].conjugate()
            G[i * n + j] = s
            G[j * n + i] = s.conjugate()
        G[i * n + i] = G[i * n + i].real

    if precoder == ZF_MIN or precoder == ZF_MAX or equalizer == EQ_ZF:
        if chol_inverse(G, Ginv, n) != 0:
            return 1
        if not (norm1(G, n) * norm1(Ginv, n) < COND_LIMIT):
            return 1

    if precoder == ZF_MIN:
        tr = 0.0
        for k in range(n):
            tr += Ginv[k * n + k].real
        for k in range(n):
            gamma[k] = rho / tr
        return 0
    if precoder == ZF_MAX:
        for k in range(n):
            diag[k] = Ginv[k * n + k].real
        water_fill(diag, rho, gamma, n)
        return 0

    if precoder == MF:
        shift = 0.0
        eta = 0.0
        for i in range(n * n):
            A[i] = G[i]
        for k in range(n):
            eta += G[k * n + k].real
    else:
        shift = c if precoder == RZF else n / rho
        for i in range(n * n):
            R[i] = G[i]
        for k in range(n):
            R[k * n + k] = R[k * n + k] + shift
        if chol_inverse(R, Rinv, n) != 0:
            return 1
        for i in range(n):
            for j in range(n):
                s = 0
                for k in range(n):
                    s = s + G[i * n + k] * Rinv[k * n + j]
                A[i * n + j] = s
        eta = 0.0
        for i in range(n):
            for j in range(n):
                eta += (A[i * n + j] * Rinv[j * n + i]).real
    if not (eta > 0.0):
        return 1

    if equalizer == EQ_NONE:
        q = rho / (n * eta)
        for k in range(n):
            leak = 0.0
            for i in range(n):
                if i != k:
                    leak += abs2(A[k * n + i])
            gamma[k] = q * abs2(A[k * n + k]) / (q * leak + 1.0)
    elif equalizer == EQ_ZF:
        # inverse of the (Hermitian) composite direction: G^-1 or I + shift G^-1
        for k in range(n):
            d = 0.0
            for i in range(n):
                s = Ginv[k * n + i] if precoder == MF else shift * Ginv[k * n + i]
                if precoder != MF and i == k:
                    s = s + 1.0
                d += abs2(s)
            gamma[k] = (rho / n) / (eta * d)
    else:
        q = rho / (n * eta)
        for i in range(n):
            for j in range(n):
                s = 0
                for k in range(n):
                    s = s + A[k * n + i].conjugate() * A[k * n + j]
                K[i * n + j] = q * s
            K[i * n + i] = K[i * n + i] + 1.0
        if chol_inverse(K, R, n) != 0:
            return 1
        for k in range(n):
            d = 1.0 / R[k * n + k].real - 1.0
            gamma[k] = d if d > 0.0 else 0.0
    return 0


def batch_sinr(const cplx[:, :, ::1] h, int precoder, int equalizer,
               double rho, double c, double[:, ::1] gamma,
               unsigned char[::1] singular):
    """Fill ``gamma[t, :]`` and ``singular[t]`` for every trial ``t``."""
    cdef Py_ssize_t t, T = h.shape[0]
    cdef int n = <int> h.shape[1]
    cdef int m = <int> h.shape[2]
    cdef int k
    if n > MAXN:
        raise ValueError(f"compiled kernel supports n <= {MAXN}, got {n}")
    if gamma.shape[0] != T or gamma.shape[1] != n or singular.shape[0] != T:
        raise ValueError("output buffers do not match the channel batch")
    with nogil:
        for t in range(T):
            singular[t] = one_trial(&h[t, 0, 0], n, m, precoder, equalizer,
                                    rho, c, &gamma[t, 0])
            if singular[t]:
                for k in range(n):
                    gamma[t, k] = 0.0
    return None
