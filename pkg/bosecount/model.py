from dataclasses import dataclass, field
from enum import Enum

import numpy as np

class Method(Enum):
   CLOSED_FORM = 'closed-form'
   PARTIAL_FRACTIONS = 'partial-fractions'
   MONTE_CARLO = 'monte-carlo'
   EXACT = 'exact'
   BINOMIAL = 'binomial'
   MIXTURE = 'mixture'

@dataclass
class CountDistribution:
   """
   The probabilities P_a for a = 0..n atoms to escape given n photons.
   """
   n : int
   probabilities : np.ndarray
   q : float = None
   p : float = None
   method : Method = Method.CLOSED_FORM

   def __post_init__(self):
      self.probabilities = np.asarray(self.probabilities,dtype=float)
      assert self.probabilities.shape==(self.n+1,), f'Support of {self.probabilities.shape} does not match n={self.n}'

   def __len__(self):
      return len(self.probabilities)

   def __getitem__(self,a):
      if a<0 or a>self.n:
         return 0.0
      return float(self.probabilities[a])

   @property
   def total(self):
      return float(self.probabilities.sum())

   def save(self):
      return {
         'n' : self.n,
         'q' : self.q,
         'p' : self.p,
         'method' : self.method.value,
         'probabilities' : self.probabilities.tolist()
      }

@dataclass
class Moments:
   mean : float
   variance : float
   fano : float

@dataclass
class Deviation:
   differences : np.ndarray
   total_variation : float
   fano_ratio : float

@dataclass
class RunManifest:
   subcommand : str
   parameters : dict = field(default_factory=dict)
   seed : int = None
   version : str = None
   schema : int = 1
   checksum : str = None

   def save(self):
      return {
         'subcommand' : self.subcommand,
         'parameters' : self.parameters,
         'seed' : self.seed,
         'version' : self.version,
         'schema' : self.schema,
         'checksum' : self.checksum
      }
