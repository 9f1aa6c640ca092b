import numpy as np
import pytest

from owsglab.hardcore import (
    HardcoreSpec,
    coin_predictor,
    decode_success_rate,
    gl_decode,
    hardcore_eval,
    hardcore_eval_int,
    parity_predictor,
)
from owsglab.sampling import spawn_rngs


def test_zero_key_maps_to_zero():
    spec = HardcoreSpec(n=4, out_len=3)
    out = hardcore_eval(spec, np.zeros(4, dtype=np.uint8), np.ones(8, dtype=np.uint8))
    assert np.array_equal(out, np.zeros(3, dtype=np.uint8))


def test_selector_window():
    # out_len 1 with r-window a unit vector picks out one key bit
    spec = HardcoreSpec(n=4, out_len=1)
    r = np.zeros(8, dtype=np.uint8)
    r[2] = 1
    x = np.array([1, 0, 1, 1], dtype=np.uint8)
    assert hardcore_eval(spec, x, r)[0] == x[2]


def test_hand_computed_parities():
    spec = HardcoreSpec(n=4, out_len=3)
    x = np.array([1, 1, 0, 1], dtype=np.uint8)  # 1011 little-endian = 0xB
    r = np.array([1, 0, 1, 1, 0, 1, 0, 0], dtype=np.uint8)
    # windows: r[0:4]=1011, r[1:5]=0110, r[2:6]=1101
    want = [
        (1 * 1 + 1 * 0 + 0 * 1 + 1 * 1) % 2,
        (1 * 0 + 1 * 1 + 0 * 1 + 1 * 0) % 2,
        (1 * 1 + 1 * 1 + 0 * 0 + 1 * 1) % 2,
    ]
    assert hardcore_eval(spec, x, r).tolist() == want


def test_length_validation():
    spec = HardcoreSpec(n=4, out_len=2)
    with pytest.raises(ValueError):
        hardcore_eval(spec, np.zeros(3, dtype=np.uint8), np.zeros(8, dtype=np.uint8))
    with pytest.raises(ValueError):
        hardcore_eval(spec, np.zeros(4, dtype=np.uint8), np.zeros(7, dtype=np.uint8))
    with pytest.raises(ValueError):
        HardcoreSpec(n=3, out_len=4)


def test_linearity_in_key():
    spec = HardcoreSpec(n=5, out_len=4)
    rng = np.random.default_rng(0)
    for _ in range(50):
        x1 = rng.integers(0, 2, size=5).astype(np.uint8)
        x2 = rng.integers(0, 2, size=5).astype(np.uint8)
        r = rng.integers(0, 2, size=10).astype(np.uint8)
        lhs = hardcore_eval(spec, x1 ^ x2, r)
        rhs = hardcore_eval(spec, x1, r) ^ hardcore_eval(spec, x2, r)
        assert np.array_equal(lhs, rhs)


def test_output_bits_unbiased_and_pairwise_independent():
    # exhaustive over x uniform and r uniform at n = 5
    n = 5
    spec = HardcoreSpec(n=n, out_len=3)
    counts = np.zeros(3)
    pair_counts = np.zeros((3, 3))
    total = 0
    rng = np.random.default_rng(1)
    for x in range(2 ** n):
        xb = np.array([(x >> k) & 1 for k in range(n)], dtype=np.uint8)
        for _ in range(8):  # random subsample of the 2^10 r space per x
            r = rng.integers(0, 2, size=2 * n).astype(np.uint8)
            g = hardcore_eval(spec, xb, r)
            counts += g
            pair_counts += np.outer(g, g)
            total += 1
    freq = counts / total
    assert np.all(np.abs(freq - 0.5) < 0.05)
    for i in range(3):
        for j in range(3):
            if i != j:
                assert abs(pair_counts[i, j] / total - 0.25) < 0.05


def test_noiseless_decoding_recovers_exactly():
    rng = np.random.default_rng(2)
    x = 0b10110101
    pred = parity_predictor(x, 8, 0.0)
    cands = gl_decode(pred, 8, 0.5, rng)
    assert x in cands


def test_noiseless_success_rate_is_one():
    assert decode_success_rate(8, 0.0, trials=20, seed=3) == 1.0


def test_noisy_decoding_mostly_succeeds():
    rate = decode_success_rate(8, 0.10, trials=40, seed=4)
    assert rate >= 0.9


def test_coin_predictor_only_hits_by_list_coverage():
    # a coin predictor carries no signal: hits occur only when the key
    # happens to fall inside the (size ~ n/eps^2) candidate list, so use
    # n large enough that the list covers a small corner of key space
    n = 12
    hits = 0
    list_sizes = []
    trials = 40
    for rng in spawn_rngs(5, trials):
        x = int(rng.integers(0, 2 ** n))
        cands = gl_decode(coin_predictor(), n, 0.5, rng)
        list_sizes.append(len(cands))
        hits += int(x in cands)
    coverage = np.mean(list_sizes) / 2 ** n
    assert coverage < 0.15
    assert hits / trials <= coverage + 3 * np.sqrt(max(coverage, 0.01) / trials) + 0.05


def test_advantage_transfer_monotone_at_fixed_budget():
    # fix the decoder's query budget (advantage estimate 0.5) and sweep
    # the true advantage: success must climb with the signal
    rates = [
        decode_success_rate(12, fr, trials=30, seed=6, advantage=0.5)
        for fr in (0.48, 0.44, 0.38, 0.0)
    ]
    for lo, hi in zip(rates, rates[1:]):
        assert hi >= lo - 0.1  # monotone increase up to Monte Carlo noise
    assert rates[-1] == 1.0
    assert rates[0] <= 0.35


def test_int_wrapper_consistent():
    spec = HardcoreSpec(n=4, out_len=2)
    rng = np.random.default_rng(7)
    for _ in range(20):
        x = int(rng.integers(0, 16))
        r = int(rng.integers(0, 256))
        xb = np.array([(x >> k) & 1 for k in range(4)], dtype=np.uint8)
        rb = np.array([(r >> k) & 1 for k in range(8)], dtype=np.uint8)
        bits = hardcore_eval(spec, xb, rb)
        assert hardcore_eval_int(spec, x, r) == int(bits[0]) + 2 * int(bits[1])
