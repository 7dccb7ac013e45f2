"""Byte- and token-level mutations of valid documents."""

from __future__ import annotations

import random

JUNK = ['<', '>', '"', "'", '{', '}', '(', ')', '.', ';', ',', '?', '$', '_:', '^^', '@', '\\', '\\u00', '#',
        ':', '*', '+', '|', '!', '^', '/', 'FILTER', 'OPTIONAL', 'UNION', 'SELECT', 'a', '\n', ' ', '\x00',
        'é', '퟿', '<http://x/>', '"x"@', '123', '1e', '.5', 'GROUP BY', 'LIMIT', 'VALUES']


def mutate(text: str, rng: random.Random, edits: int | None = None) -> str:
    chars = list(text)
    for _ in range(edits if edits is not None else rng.randint(1, 4)):
        op = rng.random()
        i = rng.randrange(len(chars) + 1)
        if op < 0.3 and chars:
            del chars[min(i, len(chars) - 1)]
        elif op < 0.6:
            chars[i:i] = list(rng.choice(JUNK))
        elif op < 0.8 and chars:
            j = rng.randrange(len(chars))
            chars[min(i, len(chars) - 1)], chars[j] = chars[j], chars[min(i, len(chars) - 1)]
        else:
            k = rng.randint(1, 8)
            chars[i:i + k] = []
    return "".join(chars)


def random_bytes(rng: random.Random, n: int = 80) -> bytes:
    return bytes(rng.randrange(256) for _ in range(rng.randint(0, n)))
