"""Toy classical encrypted-control baselines, for timing comparisons only.

Textbook RSA and Paillier with 512-bit moduli and a SHA-256 counter-mode
XOR cipher. None of these are secure: no padding, small keys, deterministic
key generation from a seed. Signed reals are carried as fixed-point integers
reduced modulo the plaintext modulus. Big-integer arithmetic goes through
gmpy2.
"""

import hashlib
import math
import random
import struct
from dataclasses import dataclass

import gmpy2
from gmpy2 import mpz, powmod

SMALL_PRIMES = (3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97)


def is_probable_prime(n, rounds=40, rng=None):
    """Miller-Rabin with random bases."""
    if n < 2:
        return False
    if n in (2,) + SMALL_PRIMES:
        return True
    if n % 2 == 0 or any(n % p == 0 for p in SMALL_PRIMES):
        return False
    rng = rng or random.Random(n)
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for _ in range(rounds):
        a = rng.randrange(2, n - 1)
        x = powmod(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def random_prime(bits, rng):
    while True:
        cand = rng.getrandbits(bits) | (1 << (bits - 1)) | 1
        if is_probable_prime(cand, rng=rng):
            return cand


class FixedPoint:
    """Signed fixed-point encoding ``round(x * 2^frac)`` modulo ``modulus``."""

    def __init__(self, modulus, frac_bits=16):
        self.modulus = modulus
        self.scale = 1 << frac_bits
        self.frac_bits = frac_bits

    def encode(self, x, scale_power=1):
        return round(x * self.scale**scale_power) % self.modulus

    def decode(self, m, scale_power=1):
        m = int(m)
        if m > self.modulus // 2:
            m -= self.modulus
        return m / self.scale**scale_power


@dataclass(frozen=True)
class RsaKey:
    n: int
    e: int
    d: int


def rsa_keygen(bits=512, seed=0):
    rng = random.Random(seed)
    e = 65537
    while True:
        p = random_prime(bits // 2, rng)
        q = random_prime(bits // 2, rng)
        if p == q:
            continue
        phi = (p - 1) * (q - 1)
        if math.gcd(e, phi) == 1:
            return RsaKey(mpz(p * q), mpz(e), gmpy2.invert(e, phi))


def rsa_encrypt(key, m):
    return powmod(m, key.e, key.n)


def rsa_decrypt(key, c):
    return powmod(c, key.d, key.n)


@dataclass(frozen=True)
class PaillierKey:
    n: int
    n2: int
    lam: int
    mu: int

    @property
    def g(self):
        return self.n + 1


def paillier_keygen(bits=512, seed=0):
    rng = random.Random(seed)
    while True:
        p = random_prime(bits // 2, rng)
        q = random_prime(bits // 2, rng)
        if p != q and math.gcd(p * q, (p - 1) * (q - 1)) == 1:
            break
    n = mpz(p * q)
    lam = mpz((p - 1) * (q - 1) // math.gcd(p - 1, q - 1))
    # With g = n + 1, L(g^lam mod n^2) = lam mod n.
    return PaillierKey(n, n * n, lam, gmpy2.invert(lam, n))


def paillier_encrypt(key, m, rng):
    while True:
        r = rng.randrange(1, int(key.n))
        if math.gcd(r, key.n) == 1:
            break
    # (n+1)^m = 1 + m n (mod n^2)
    return (1 + m * key.n) * powmod(r, key.n, key.n2) % key.n2


def paillier_decrypt(key, c):
    u = powmod(c, key.lam, key.n2)
    return (u - 1) // key.n * key.mu % key.n


def paillier_add(key, c1, c2):
    return c1 * c2 % key.n2


def paillier_scale(key, c, k):
    return powmod(c, k % key.n, key.n2)


class KeystreamCipher:
    """XOR with SHA-256(key || nonce || counter) blocks."""

    def __init__(self, key: bytes):
        self.key = key

    def _stream(self, nonce, length):
        out = bytearray()
        counter = 0
        while len(out) < length:
            out += hashlib.sha256(self.key + struct.pack(">QQ", nonce, counter)).digest()
            counter += 1
        return bytes(out[:length])

    def encrypt(self, nonce, data: bytes):
        ks = self._stream(nonce, len(data))
        return bytes(a ^ b for a, b in zip(data, ks))

    decrypt = encrypt

    def encrypt_reals(self, nonce, values):
        return self.encrypt(nonce, struct.pack(f">{len(values)}d", *values))

    def decrypt_reals(self, nonce, data):
        return list(struct.unpack(f">{len(data) // 8}d", self.decrypt(nonce, data)))
