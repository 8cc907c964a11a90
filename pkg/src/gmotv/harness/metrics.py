import numpy as np


class InfiniteISNRError(ValueError):
    pass


def isnr(original, degraded, restored) -> float:
    """Improvement in SNR, ``20 log10(||g - f|| / ||g - g_hat||)`` in dB."""
    g, f, gh = (np.asarray(a, dtype=np.float64) for a in (original, degraded, restored))
    if not g.shape == f.shape == gh.shape:
        raise ValueError(f"length mismatch: {g.shape}, {f.shape}, {gh.shape}")
    err = np.linalg.norm(g - gh)
    if err == 0:
        raise InfiniteISNRError("restored signal equals the original; ISNR is infinite")
    return float(20.0 * np.log10(np.linalg.norm(g - f) / err))


def snr_db(clean, noisy) -> float:
    clean = np.asarray(clean, dtype=np.float64)
    noise = np.asarray(noisy) - clean
    return float(10.0 * np.log10(np.sum(clean ** 2) / np.sum(noise ** 2)))


def bsnr_db(blurred, noisy) -> float:
    blurred = np.asarray(blurred, dtype=np.float64)
    noise = np.asarray(noisy) - blurred
    return float(10.0 * np.log10(np.var(blurred) / np.mean(noise ** 2)))
