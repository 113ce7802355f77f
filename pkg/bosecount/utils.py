import logging

import numpy as np

class DetectorError(Exception):
   pass

class ConfigurationError(DetectorError, ValueError):
   def __init__(self, message, *args, field=None, **kwargs):
      if field is None:
         super().__init__(message,*args,**kwargs)
      else:
         super().__init__(f'{field}: {message}',*args,**kwargs)
      self.field = field

class RegimeError(DetectorError):
   def __init__(self, message, *args, saturation=None, **kwargs):
      if saturation is None:
         super().__init__(message,*args,**kwargs)
      else:
         super().__init__(f'{message} (S={saturation:.6g})',*args,**kwargs)
      self.saturation = saturation

class QuadratureFailure(DetectorError):
   pass

class SolverFailure(DetectorError):
   def __init__(self, message, *args, solver_message=None, **kwargs):
      if solver_message is None:
         super().__init__(message,*args,**kwargs)
      else:
         super().__init__(f'{message}: {solver_message}',*args,**kwargs)
      self.solver_message = solver_message

class PartialFractionInstability(DetectorError):
   def __init__(self, message, *args, digits_lost=None, **kwargs):
      if digits_lost is None:
         super().__init__(message,*args,**kwargs)
      else:
         super().__init__(f'{message} ({digits_lost:.1f} digits lost)',*args,**kwargs)
      self.digits_lost = digits_lost

class OracleDisagreement(DetectorError):
   def __init__(self, message, *args, distance=None, tolerance=None, **kwargs):
      if distance is None:
         super().__init__(message,*args,**kwargs)
      else:
         super().__init__(f'{message}: distance {distance:.3e} exceeds {tolerance:.3e}',*args,**kwargs)
      self.distance = distance
      self.tolerance = tolerance

def set_log_level(log_level='info'):
   if log_level is not None:
      n_log_level = getattr(logging, log_level.upper(), None)
      if n_log_level is not None:
         logging.basicConfig(level=n_log_level)
         logging.info(f'Logging level is {log_level}')

def pad(*vectors):
   """
   Zero-pads probability vectors to a common support length.
   """
   size = max(len(v) for v in vectors)
   padded = []
   for v in vectors:
      v = np.asarray(v,dtype=float)
      padded.append(np.concatenate([v,np.zeros(size-len(v))]))
   return padded

def total_variation(first,second):
   first, second = pad(first,second)
   return 0.5*float(np.abs(first-second).sum())

def require(condition,message,field=None):
   if not condition:
      raise ConfigurationError(message,field=field)
