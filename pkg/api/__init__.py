"""
HTTP API for the Gaussian toolkit.

The router lives in api.routes; api.models holds the pydantic schemas the
CLI shares, and importing it does not load FastAPI.
"""
