import numpy as np
import pytest

from eulerapprox.primes import (
    cached_primes_up_to,
    primes_in_interval,
    primes_up_to,
    read_prime_cache,
    write_prime_cache,
)


def reference_sieve(n):
    """Independent odd-only sieve used as the oracle."""
    if n < 2:
        return []
    out = [2]
    flags = bytearray([1]) * ((n + 1) // 2)   # index i -> 2i+1
    for i in range(1, (int(n**0.5) + 1) // 2 + 1):
        if flags[i]:
            p = 2 * i + 1
            for j in range(p * p // 2, len(flags), p):
                flags[j] = 0
    out.extend(2 * i + 1 for i in range(1, len(flags)) if flags[i] and 2 * i + 1 <= n)
    return out


def test_small_cases():
    assert primes_up_to(10).tolist() == [2, 3, 5, 7]
    assert primes_up_to(1).tolist() == []
    assert primes_up_to(0).tolist() == []
    assert primes_up_to(2).tolist() == [2]


def test_against_oracle_to_million():
    got = primes_up_to(10**6)
    assert len(got) == 78498
    ref = reference_sieve(10**6)
    assert got.tolist() == ref


def test_negative_rejected():
    with pytest.raises(ValueError):
        primes_up_to(-1)


def test_interval():
    assert primes_in_interval(10, 20).tolist() == [11, 13, 17, 19]
    assert primes_in_interval(100, 100.5).tolist() == []


def test_cache_roundtrip(tmp_path):
    path = str(tmp_path / "primes.bin")
    ps = primes_up_to(10_000)
    write_prime_cache(path, ps)
    back = read_prime_cache(path)
    assert np.array_equal(back, ps)
    with open(path, "rb") as fh:
        assert fh.read(5) == b"EPRM1"


def test_cache_bad_magic(tmp_path):
    path = str(tmp_path / "bad.bin")
    with open(path, "wb") as fh:
        fh.write(b"NOPE!" + b"\x00" * 16)
    with pytest.raises(ValueError):
        read_prime_cache(path)


def test_cached_primes_rebuilds(tmp_path):
    path = str(tmp_path / "cache.bin")
    first = cached_primes_up_to(100, cache_path=path)
    assert first[-1] == 97
    wider = cached_primes_up_to(1000, cache_path=path)
    assert wider[-1] == 997
    again = cached_primes_up_to(500, cache_path=path)
    assert again[-1] == 499
