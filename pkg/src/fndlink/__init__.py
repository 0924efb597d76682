"""
fndlink: multi-user wireless links received by NV centers in fluorescent
nanodiamonds, simulated from spin physics to recovered payload.
"""

__version__ = "0.1.0"
