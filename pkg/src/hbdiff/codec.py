"""Text encoding of bias functions.

Biases are written on the command line and in suite files as:

    text      | bias
    ---------------------------------
    id        | Identity()
    pow:<a>   | Power(a), e.g. pow:0.2
    exp:<a>   | Exponential(a), e.g. exp:-2

`<a>` is any finite real accepted by `float`. Encoding a decoded bias
gives back a canonical form (`pow:2.0` encodes as `pow:2`, `pow:1` stays
`pow:1` but compares equal to `id`).
"""

from __future__ import annotations

import math

from hbdiff.bias import BiasFunction, Exponential, Identity, Power
from hbdiff.exception import HbDiffException

IDENTITY_TOKEN = 'id'
"""Text form of the identity bias."""

POWER_PREFIX = 'pow'
"""Family prefix of power biases."""

EXPONENTIAL_PREFIX = 'exp'
"""Family prefix of exponential biases."""

SEPARATOR = ':'
"""Separates the family prefix from its parameter."""


class BiasSyntaxError(HbDiffException):
    """Raised when a bias text cannot be decoded."""
    exit_code = 3


def encode(bias: BiasFunction) -> str:
    """Encode a bias into its text form."""
    return str(bias)


def decode(text: str) -> BiasFunction:
    """Decode the text form of a bias.

    Arguments:
        text (str): `id`, `pow:<a>` or `exp:<a>`; surrounding whitespace
            is ignored.

    Returns:
        BiasFunction

    Raises:
        BiasSyntaxError: if the family is unknown or the parameter is not
            a finite real
    """
    token = text.strip()
    if token == IDENTITY_TOKEN:
        return Identity()
    prefix, sep, raw = token.partition(SEPARATOR)
    if not sep or prefix not in (POWER_PREFIX, EXPONENTIAL_PREFIX):
        raise BiasSyntaxError(
            f'bias {text!r} not recognized, expected {IDENTITY_TOKEN!r},'
            f' {POWER_PREFIX}:<a> or {EXPONENTIAL_PREFIX}:<a>'
        )
    try:
        parameter = float(raw)
    except ValueError as e:
        raise BiasSyntaxError(
            f'bias parameter {raw!r} in {text!r} is not a number'
        ) from e
    if not math.isfinite(parameter):
        raise BiasSyntaxError(f'bias parameter in {text!r} must be finite')
    if prefix == POWER_PREFIX:
        return Power(parameter)
    return Exponential(parameter)
