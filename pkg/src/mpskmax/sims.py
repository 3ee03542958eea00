"""Monte-Carlo harnesses: noncoherent MLSD over SIMO channels and
limited-feedback constant-envelope transmit beamforming.

Randomness comes from counter-based Philox streams keyed on (seed, trial,
purpose), so results are bit-identical run to run and independent of any
execution order.  SNR conventions (the models leave them implicit):

* MLSD: SNR = 1/sigma^2 per receive antenna, unit-modulus symbols,
  unit-variance channel taps.
* Beamforming: SNR = E{|x|^2}/sigma^2 with per-antenna unit-envelope
  weights (total transmit power N).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import core, solver


@dataclass
class MlsdConfig:
    n: int                      # sequence length
    d: int                      # receive antennas
    m: int                      # alphabet order
    snr_db_grid: list
    channel_trials: int
    symbols_per_channel: int = 1
    seed: int = 0

    def validate(self):
        _check_common(self)
        if self.n < 2:
            raise ValueError("differential encoding needs n >= 2")


@dataclass
class BeamformingConfig:
    n: int                      # transmit antennas
    d: int                      # receive antennas
    m: int                      # codebook order
    snr_db_grid: list
    channel_trials: int
    symbols_per_channel: int = 1
    seed: int = 0

    def validate(self):
        _check_common(self)


def _check_common(cfg):
    if cfg.n < 1 or cfg.d < 1:
        raise ValueError("antenna/length parameters must be positive")
    if cfg.m < 2 or cfg.m % 2:
        raise ValueError("alphabet order must be even and >= 2")
    if cfg.channel_trials < 1 or cfg.symbols_per_channel < 1:
        raise ValueError("trial counts must be positive")
    if not len(cfg.snr_db_grid):
        raise ValueError("empty SNR grid")


@dataclass
class ErrorRateTable:
    label: str
    rows: list = field(default_factory=list)  # (snr_db, error_rate, trials, errors)

    def add(self, snr_db, errors, trials, symbols):
        self.rows.append((float(snr_db), errors / (trials * symbols),
                          trials, errors))

    def rates(self):
        return np.array([r[1] for r in self.rows])

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("snr_db,error_rate,trials,errors\n")
            for snr_db, rate, trials, errors in self.rows:
                fh.write(f"{snr_db:.10g},{rate:.10g},{trials},{errors}\n")


def _stream(seed, *key):
    return np.random.Generator(np.random.Philox(
        np.random.SeedSequence(entropy=seed, spawn_key=key)))


def _cn(rng, *shape):
    """Circular complex Gaussian, unit variance per entry."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) \
        / math.sqrt(2.0)


def _noise_sigma(snr_db):
    return math.sqrt(10.0 ** (-snr_db / 10.0)) if math.isfinite(snr_db) else 0.0


def simulate_mlsd(cfg, workers=1, backend=None):
    """Noncoherent MLSD with differential encoding vs the coherent MRC bound.

    Per trial: draw one channel h (D taps), then per SNR point transmit
    ``symbols_per_channel`` differentially-encoded sequences through
    y_d = h_d s + n_d and decode by maximizing ||Y^H s||^2 over the
    candidate set.  The MLSD SER counts information symbols after
    differential decoding; the MRC baseline decides each symbol coherently
    from the known-channel combined statistic and its SER counts all N
    transmitted symbols.
    """
    cfg.validate()
    mlsd = ErrorRateTable("mlsd")
    mrc = ErrorRateTable("mrc")
    n, d, m = cfg.n, cfg.d, cfg.m
    for si, snr_db in enumerate(cfg.snr_db_grid):
        sigma = _noise_sigma(snr_db)
        err_mlsd = 0
        err_mrc = 0
        for trial in range(cfg.channel_trials):
            h = _cn(_stream(cfg.seed, trial, 0), d)
            rng = _stream(cfg.seed, trial, 1 + si)
            for _ in range(cfg.symbols_per_channel):
                info = rng.integers(0, m, size=n - 1)
                exps = np.zeros(n, dtype=np.int64)
                exps[1:] = np.cumsum(info) % m
                s = np.exp(2j * math.pi * exps / m)
                y = s[:, None] * h[None, :] + sigma * _cn(rng, n, d)
                est = solver.solve(y, m, workers=workers,
                                   backend=backend).sequence
                err_mlsd += int(np.count_nonzero(
                    (est[1:] - est[:-1]) % m != info % m))
                stat = y @ h.conj()
                dec = np.floor(np.arctan2(stat.imag, stat.real)
                               * m / core.TWO_PI + 0.5).astype(np.int64) % m
                err_mrc += int(np.count_nonzero(dec != exps))
        mlsd.add(snr_db, err_mlsd, cfg.channel_trials,
                 cfg.symbols_per_channel * (n - 1))
        mrc.add(snr_db, err_mrc, cfg.channel_trials,
                cfg.symbols_per_channel * n)
    return mlsd, mrc


def simulate_beamforming(cfg, workers=1, backend=None):
    """BER of binary signalling through the best MPSK beamforming vector.

    Per trial: draw H (D x N), pick w maximizing ||H w||^2 over the MPSK
    codebook (the white-disturbance max-SNR criterion), then push
    ``symbols_per_channel`` binary symbols through y = H w x + n and decide
    with the matched filter (H w)^H y.
    """
    cfg.validate()
    table = ErrorRateTable("beam")
    n, d, m = cfg.n, cfg.d, cfg.m
    for si, snr_db in enumerate(cfg.snr_db_grid):
        sigma = _noise_sigma(snr_db)
        errors = 0
        for trial in range(cfg.channel_trials):
            h_mat = _cn(_stream(cfg.seed, trial, 0), d, n)
            rng = _stream(cfg.seed, trial, 1 + si)
            res = solver.solve(h_mat.conj().T, m, workers=workers,
                               backend=backend)
            w = np.exp(2j * math.pi * res.sequence / m)
            f = h_mat @ w
            bits = rng.integers(0, 2, size=cfg.symbols_per_channel)
            x = 1.0 - 2.0 * bits
            noise = sigma * _cn(rng, cfg.symbols_per_channel, d)
            stat = (f.conj()[None, :] * (x[:, None] * f[None, :] + noise)).sum(axis=1)
            errors += int(np.count_nonzero((stat.real < 0) != (x < 0)))
        table.add(snr_db, errors, cfg.channel_trials, cfg.symbols_per_channel)
    return table


def mc_standard_error(rate, observations):
    """Binomial Monte-Carlo standard error of an error-rate estimate."""
    return math.sqrt(max(rate * (1.0 - rate), 1e-12) / observations)
