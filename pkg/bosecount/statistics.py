import math
import logging
from dataclasses import dataclass

import numpy as np
from scipy.stats import poisson, geom

from .counting import count_distributions, binomial_probabilities, moments
from .model import CountDistribution, Deviation, Method
from .utils import ConfigurationError, pad, total_variation, require

default_tail = 1e-12

@dataclass
class PhotonStatistics:
   """
   A photon-number distribution P_n, n = 0..n_max. The mass beyond n_max is
   at most the truncation bound.
   """
   probabilities : np.ndarray
   label : str = 'custom'
   truncation : float = 0.0

   def __post_init__(self):
      self.probabilities = np.asarray(self.probabilities,dtype=float)
      require(self.probabilities.ndim==1 and len(self.probabilities)>0,'must be a non-empty vector','probabilities')
      require(np.all(self.probabilities>=0),'must not be negative','probabilities')
      require(abs(self.probabilities.sum() - 1)<=self.truncation + 1e-10,'must sum to one within the truncation bound','probabilities')

   @property
   def n_max(self):
      return len(self.probabilities) - 1

   @property
   def mean(self):
      return float(np.dot(np.arange(self.n_max+1),self.probabilities))

def fock(n):
   require(int(n)==n and n>=0,'must be a non-negative integer','n')
   P = np.zeros(int(n)+1)
   P[-1] = 1.0
   return PhotonStatistics(P,label=f'fock({int(n)})')

def vacuum():
   return fock(0)

def coherent(mean,tail=default_tail):
   """
   Poisson photon numbers, truncated where the remaining mass drops below tail.
   """
   require(mean>=0,'must not be negative','mean')
   if mean==0:
      return PhotonStatistics(np.ones(1),label='coherent(0)')
   n_max = int(poisson.isf(tail,mean)) + 1
   P = poisson.pmf(np.arange(n_max+1),mean)
   return PhotonStatistics(P,label=f'coherent({mean:g})',truncation=float(poisson.sf(n_max,mean)))

def thermal(mean,tail=default_tail):
   """
   Bose-Einstein (geometric) photon numbers, P_n = μⁿ/(1+μ)ⁿ⁺¹.
   """
   require(mean>=0,'must not be negative','mean')
   if mean==0:
      return PhotonStatistics(np.ones(1),label='thermal(0)')
   distribution = geom(1/(1 + mean),loc=-1)
   n_max = int(distribution.isf(tail)) + 1
   P = distribution.pmf(np.arange(n_max+1))
   return PhotonStatistics(P,label=f'thermal({mean:g})',truncation=float(distribution.sf(n_max)))

def photon_source(kind,value,tail=default_tail):
   """
   Builds the photon statistics named on the command line.
   """
   if kind=='fock':
      return fock(value)
   if kind=='coherent':
      return coherent(value,tail)
   if kind=='thermal':
      return thermal(value,tail)
   raise ConfigurationError(f'unknown photon source {kind}',field='source')

@dataclass
class DetectorResponse:
   """
   The conditional count statistics P(a|n) as a lower-triangular matrix with
   rows n = 0..n_max.
   """
   matrix : np.ndarray
   q : float = None
   p : float = None

   @property
   def n_max(self):
      return self.matrix.shape[0] - 1

   def row(self,n):
      return CountDistribution(n,self.matrix[n,:n+1],q=self.q,p=self.p)

def detector_response(q,p,n_max):
   require(int(n_max)==n_max and n_max>=0,'must be a non-negative integer','n_max')
   matrix = count_distributions(q,p,int(n_max))
   logging.debug(f'Detector response q={q:.6g}, p={p:.6g} up to n={n_max}')
   return DetectorResponse(matrix,q=q,p=p)

def binomial_response(eta,n_max):
   require(0<=eta<=1,'must be within [0,1]','eta')
   matrix = np.zeros((n_max+1,n_max+1))
   for n in range(n_max+1):
      matrix[n,:n+1] = binomial_probabilities(n,eta)
   return DetectorResponse(matrix,q=math.inf,p=eta)

def mix(photons,response):
   """
   P_a = Σ_n P(a|n) P_n over the photon statistics.
   """
   if response.n_max<photons.n_max:
      raise ConfigurationError(f'response covers n <= {response.n_max} but the photon statistics reach n = {photons.n_max}',field='n_max')
   return photons.probabilities @ response.matrix[:photons.n_max+1,:photons.n_max+1]

def binomial_reference(eta,n):
   require(0<=eta<=1,'must be within [0,1]','eta')
   require(int(n)==n and n>=0,'must be a non-negative integer','n')
   return CountDistribution(int(n),binomial_probabilities(int(n),eta),q=math.inf,p=eta,method=Method.BINOMIAL)

def mandel_counts(photons,eta):
   """
   Mandel's counting formula for number-diagonal light, i.e. binomial
   thinning with efficiency η.
   """
   return mix(photons,binomial_response(eta,photons.n_max))

def poisson_reference(mean,n_max):
   return poisson.pmf(np.arange(n_max+1),mean)

def bose_reference(mean,n_max):
   if mean==0:
      return np.eye(1,n_max+1)[0]
   return geom(1/(1 + mean),loc=-1).pmf(np.arange(n_max+1))

def deviation(dist,ref):
   """
   The per-count differences dist - ref, their total variation and the ratio
   of Fano factors.
   """
   dist = dist.probabilities if isinstance(dist,CountDistribution) else dist
   ref = ref.probabilities if isinstance(ref,CountDistribution) else ref
   dist, ref = pad(dist,ref)
   fano, fano_ref = moments(dist).fano, moments(ref).fano
   if fano_ref==0:
      ratio = 1.0 if fano==0 else math.inf
   else:
      ratio = fano/fano_ref
   return Deviation(dist - ref,total_variation(dist,ref),ratio)
