"""
Device models of the two Systems Under Test: the OBC master and the SLP slave.
"""
