import numpy as np
import pytest
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes
from hypothesis import given
from hypothesis import strategies as st

from cpakit.aes import (
    SBOX,
    IntermediateTarget,
    add_round_key_byte,
    aes128_encrypt_block,
    expand_key,
    first_round_intermediate,
    sub_bytes_byte,
)

FIPS_KEY = bytes.fromhex("000102030405060708090a0b0c0d0e0f")
FIPS_PLAINTEXT = bytes.fromhex("00112233445566778899aabbccddeeff")
FIPS_CIPHERTEXT = bytes.fromhex("69c4e0d86a7b0430d8cdb78070b4c55a")


def reference_encrypt(plaintext: bytes, key: bytes) -> bytes:
    enc = Cipher(algorithms.AES(key), modes.ECB()).encryptor()
    return enc.update(plaintext) + enc.finalize()


def reference_decrypt(ciphertext: bytes, key: bytes) -> bytes:
    dec = Cipher(algorithms.AES(key), modes.ECB()).decryptor()
    return dec.update(ciphertext) + dec.finalize()


def test_add_round_key_byte_examples():
    assert add_round_key_byte(0x00, 0x00) == 0x00
    assert add_round_key_byte(0xA7, 0xA7) == 0x00
    assert add_round_key_byte(0x53, 0xCA) == 0x99


def test_sub_bytes_byte_reference_values():
    assert sub_bytes_byte(0x00) == 0x63
    assert sub_bytes_byte(0x53) == 0xED
    assert sub_bytes_byte(0xFF) == 0x16


def test_sbox_is_a_permutation():
    assert sorted(SBOX) == list(range(256))
    assert SBOX[0x00] == 0x63


def test_first_round_intermediate_examples():
    assert first_round_intermediate(0x00, 0x00, IntermediateTarget.XOR_OUTPUT) == 0x00
    assert first_round_intermediate(0x00, 0x00, IntermediateTarget.SBOX_OUTPUT) == 0x63
    assert first_round_intermediate(0x3A, 0xC5, IntermediateTarget.XOR_OUTPUT) == 0xFF


@given(st.integers(0, 255), st.integers(0, 255))
def test_xor_intermediate_round_trips(p, k):
    assert first_round_intermediate(p, k, IntermediateTarget.XOR_OUTPUT) ^ k == p


def test_fips197_appendix_c_vector():
    assert aes128_encrypt_block(FIPS_PLAINTEXT, FIPS_KEY) == FIPS_CIPHERTEXT


def test_expand_key_first_and_last_round_keys():
    # FIPS-197 A.1 key expansion for 2b7e1516...
    key = bytes.fromhex("2b7e151628aed2a6abf7158809cf4f3c")
    rks = expand_key(key)
    assert rks[0] == key
    assert rks[10] == bytes.fromhex("d014f9a8c9ee2589e13f0cc8b6630ca6")


def test_encrypt_matches_reference_on_random_pairs():
    rng = np.random.default_rng(123)
    for _ in range(200):
        key = bytes(rng.integers(0, 256, 16, dtype=np.uint8))
        pt = bytes(rng.integers(0, 256, 16, dtype=np.uint8))
        assert aes128_encrypt_block(pt, key) == reference_encrypt(pt, key)


def test_encrypt_then_reference_decrypt_round_trips():
    rng = np.random.default_rng(5)
    for _ in range(50):
        key = bytes(rng.integers(0, 256, 16, dtype=np.uint8))
        pt = bytes(rng.integers(0, 256, 16, dtype=np.uint8))
        assert reference_decrypt(aes128_encrypt_block(pt, key), key) == pt


def test_distinct_keys_give_distinct_ciphertexts():
    rng = np.random.default_rng(77)
    pt = bytes(rng.integers(0, 256, 16, dtype=np.uint8))
    for _ in range(100):
        k1 = bytes(rng.integers(0, 256, 16, dtype=np.uint8))
        k2 = bytes(rng.integers(0, 256, 16, dtype=np.uint8))
        if k1 != k2:
            assert aes128_encrypt_block(pt, k1) != aes128_encrypt_block(pt, k2)


def test_block_length_is_enforced():
    with pytest.raises(ValueError, match="16 bytes"):
        aes128_encrypt_block(b"short", FIPS_KEY)
    with pytest.raises(ValueError, match="16 bytes"):
        aes128_encrypt_block(FIPS_PLAINTEXT, b"\x00" * 17)
