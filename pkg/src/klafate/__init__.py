"""klafate: evidential production assessment engine.

Turns extended-FMEA workbooks into an executable rule model with
confidence weights and explicit uncertainty, validates process recipes
against KPI targets, and drives an interactive operator troubleshooting
loop against a simulated bulk-good plant.
"""

__version__ = "0.1.0"
