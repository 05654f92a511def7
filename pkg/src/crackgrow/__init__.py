"""Physics-only training of crack-growth predictors from resonance-fatigue
telemetry: data preparation, a small tape-based network, five physics loss
terms, two training protocols, and a synthetic test-rig generator."""

__version__ = "0.1.0"
