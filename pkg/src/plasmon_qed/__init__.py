"""Plasmon QED - quantum dot / metal nanoparticle molecule simulator."""

__version__ = "0.1.0"
