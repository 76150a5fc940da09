"""Tests para el módulo infrastructure."""
