"""FNV-1a 64-bit hashing, shared by fold assignment and the hash embedder."""

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK = 0xFFFFFFFFFFFFFFFF


def fnv1a64(data: bytes, seed: int = 0) -> int:
    h = (FNV_OFFSET ^ (seed & _MASK)) & _MASK
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & _MASK
    return h
