"""Spin-J rotation-box correlation sets."""
