"""Oblivious relational queries over three-party replicated secret sharing."""
__version__ = "0.1.0"
