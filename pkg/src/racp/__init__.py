"""Workbench for the reversible process algebra RACP."""
