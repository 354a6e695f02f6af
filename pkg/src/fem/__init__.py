"""
The Failure Emulator Mechanism interposed between the OBC and the SLP.
"""
