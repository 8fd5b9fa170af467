"""Gas filtration in porous media: van der Waals thermodynamics, finite-dimensional
dynamics of the filtration equation, and numerical oracles that check them."""

__version__ = "0.1.0"
