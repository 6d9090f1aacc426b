from . import cases, tools
