"""
Bus core: messages, segments, the tick clock and default-read semantics.
"""
