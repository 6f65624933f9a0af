"""Verification toolkit for Overture protocols and the Prelude metalanguage."""

from .field import Prime, FieldElem, FieldError

__all__ = ["Prime", "FieldElem", "FieldError"]
