import math
import logging
from dataclasses import dataclass
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .counting import level_rates
from .model import CountDistribution, Method
from .utils import require

# shots per counter-based substream
chunk_size = 1<<16

class RngStream:
   """
   A seed plus a position. Every substream is a Philox generator keyed by
   (seed, index), so a chunk draws the same numbers regardless of which
   thread runs it or in what order.
   """

   def __init__(self,seed=0,position=0):
      require(int(seed)==seed and seed>=0,'must be a non-negative integer','seed')
      self._seed = int(seed)
      self._position = position

   @property
   def seed(self):
      return self._seed

   @property
   def position(self):
      return self._position

   def generator(self,index):
      return np.random.Generator(np.random.Philox(np.random.SeedSequence([self._seed,index])))

   def spawn(self):
      """
      The generator at the current position; the position advances by one.
      """
      generator = self.generator(self._position)
      self._position += 1
      return generator

   def __repr__(self):
      return f'RngStream(seed={self._seed},position={self._position})'

def as_generator(rng):
   if isinstance(rng,RngStream):
      return rng.spawn()
   if isinstance(rng,np.random.Generator):
      return rng
   if rng is None:
      return np.random.default_rng()
   return RngStream(rng).spawn()

def _exponential(generator,rate,size):
   # inverse CDF of a uniform draw in [0,1)
   return -np.log1p(-generator.random(size))/rate

def _waiting_times(generator,rates,size):
   total = np.zeros(size)
   for rate in rates:
      total += _exponential(generator,rate,size)
   return total

def sample_waiting_time(k,n,q,tau0,rng=None,size=None):
   """
   Draws the wait for escape k+1 as the sum of one exponential per stage with
   rates (n-k+jq)/τ₀. The q = ∞ sentinel is a single exponential draw.
   """
   require(0<=k<n,f'must be within [0,{n})','k')
   require(q>0,'must be positive (or inf)','q')
   require(tau0>0,'must be positive','tau0')
   generator = as_generator(rng)
   value = _waiting_times(generator,level_rates(k,n,q,tau0),1 if size is None else size)
   return float(value[0]) if size is None else value

def rejection_sample_waiting_time(n_eff,q,tau0,size,rng=None):
   """
   Samples w(t) ∝ exp(-n_eff t/τ₀)(1 - exp(-qt/τ₀))² by rejection from the
   exponential proposal with rate n_eff/τ₀.
   """
   require(n_eff>=1,'must be at least one','n_eff')
   require(q>0,'must be positive (or inf)','q')
   require(size>=0,'must not be negative','size')
   generator = as_generator(rng)
   rate = n_eff/tau0
   if math.isinf(q):
      return _exponential(generator,rate,size)
   accepted = []
   remaining = size
   proposals = 0
   while remaining>0:
      batch = max(2*remaining,1024)
      t = _exponential(generator,rate,batch)
      keep = t[generator.random(batch) < np.expm1(-q*t/tau0)**2]
      proposals += batch
      accepted.append(keep[:remaining])
      remaining -= len(accepted[-1])
   logging.debug(f'Rejection sampler acceptance {size/max(proposals,1):.3f}')
   return np.concatenate(accepted) if accepted else np.zeros(0)

@dataclass
class TrajectorySample:
   """
   The ordered escape times t_1 < ... < t_a within [0,τ] of one shot.
   """
   times : np.ndarray
   tau : float

   @property
   def count(self):
      return len(self.times)

def sample_trajectory(n,q,p,tau0,rng=None):
   require(0<=p<=1,'must be within [0,1]','p')
   generator = as_generator(rng)
   tau = math.inf if p==1 else -tau0*math.log1p(-p)
   times = []
   clock = 0.0
   for k in range(n):
      clock += _waiting_times(generator,level_rates(k,n,q,tau0),1)[0]
      if clock>tau:
         break
      times.append(clock)
   return TrajectorySample(np.array(times),tau)

@dataclass
class EmpiricalDistribution:
   n : int
   counts : np.ndarray
   q : float = None
   p : float = None

   @property
   def shots(self):
      return int(self.counts.sum())

   @property
   def probabilities(self):
      return self.counts/self.shots

   @property
   def stderr(self):
      """
      The binomial standard error of each bin.
      """
      P = self.probabilities
      return np.sqrt(P*(1 - P)/self.shots)

   @property
   def mean(self):
      return float(np.dot(np.arange(self.n+1),self.probabilities))

   @property
   def mean_stderr(self):
      a = np.arange(self.n+1)
      variance = float(np.dot((a - self.mean)**2,self.probabilities))
      return math.sqrt(variance/self.shots)

   def distribution(self):
      return CountDistribution(self.n,self.probabilities,q=self.q,p=self.p,method=Method.MONTE_CARLO)

   def scores(self,reference):
      """
      Bin deviations from the reference in units of its standard error,
      floored at one count.
      """
      reference = reference.probabilities if isinstance(reference,CountDistribution) else np.asarray(reference,dtype=float)
      require(len(reference)==self.n+1,f'must have {self.n+1} bins','reference')
      scale = np.sqrt(reference*(1 - reference)/self.shots) + 1/self.shots
      return (self.probabilities - reference)/scale

   def within(self,reference,sigmas=4.0):
      return bool(np.all(np.abs(self.scores(reference))<=sigmas))

def _simulate_chunk(stream,index,size,n,q,T):
   generator = stream.generator(index)
   clock = np.zeros(size)
   count = np.zeros(size,dtype=np.int64)
   active = np.arange(size)
   for k in range(n):
      clock[active] += _waiting_times(generator,level_rates(k,n,q),len(active))
      active = active[clock[active]<=T]
      count[active] += 1
      if len(active)==0:
         break
   return np.bincount(count,minlength=n+1)

def simulate_counts(n,q,p,shots,rng=0,workers=1):
   """
   Runs the renewal sequence of escapes for each shot until the clock passes
   τ/τ₀ = -ln(1-p) or all n excitations have escaped and returns the count
   histogram. Shots are split in fixed chunks with their own substreams, so
   the histogram depends on the seed only.
   """
   require(int(n)==n and n>=0,'must be a non-negative integer','n')
   require(q>0,'must be positive (or inf)','q')
   require(0<=p<=1,'must be within [0,1]','p')
   require(int(shots)==shots and shots>=1,'must be at least one','shots')
   require(workers>=1,'must be at least one','workers')
   n = int(n)
   shots = int(shots)
   counts = np.zeros(n+1,dtype=np.int64)
   if n==0 or p==0:
      counts[0] = shots
   elif p==1:
      counts[n] = shots
   else:
      stream = rng if isinstance(rng,RngStream) else RngStream(rng)
      T = -math.log1p(-p)
      chunks = [(index,min(chunk_size,shots - start)) for index, start in enumerate(range(0,shots,chunk_size))]
      run = lambda chunk : _simulate_chunk(stream,chunk[0],chunk[1],n,q,T)
      if workers==1:
         histograms = list(map(run,chunks))
      else:
         with ThreadPoolExecutor(max_workers=workers) as pool:
            histograms = list(pool.map(run,chunks))
      for histogram in histograms:
         counts += histogram
      logging.info(f'Simulated {shots} shots for n={n}, q={q:.6g}, p={p:.6g} in {len(chunks)} chunks (seed {stream.seed})')
   return EmpiricalDistribution(n,counts,q=q,p=p)
