"""Stateful vs. stateless (backwards-routable-name) CCN forwarding lab."""

__version__ = "0.1.0"
