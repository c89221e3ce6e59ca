# app/routes/__init__.py
from . import contracts
from . import analysis
from . import corpus
