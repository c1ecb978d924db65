"""Stable seed derivation and config hashing."""
import hashlib
import json


def derive_seed(seed, label):
    """Derive a 63-bit child seed from a global seed and a purpose label."""
    digest = hashlib.sha256(f"{int(seed)}:{label}".encode('utf-8')).digest()
    return int.from_bytes(digest[:8], 'little') & 0x7FFFFFFFFFFFFFFF


def canonical_json(payload):
    return json.dumps(payload, sort_keys=True, separators=(',', ':'))


def config_hash(payload):
    """Short content hash of a JSON-serializable config."""
    return hashlib.sha256(canonical_json(payload).encode('utf-8')).hexdigest()[:16]


def file_hash(path):
    """Short content hash of a file's bytes."""
    with open(path, 'rb') as handle:
        return hashlib.sha256(handle.read()).hexdigest()[:16]
