"""Firewall rule-set auditor: complexity measures, 36 configuration error
checks under first-match semantics, and corpus statistics."""

__version__ = "0.1.0"
