import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.stats import kstest, ks_2samp

from bosecount import stochastic
from bosecount.stochastic import RngStream, as_generator, sample_waiting_time, rejection_sample_waiting_time, sample_trajectory, simulate_counts, EmpiricalDistribution
from bosecount.amplitudes import waiting_density
from bosecount.counting import count_distribution, efficiency
from bosecount.utils import ConfigurationError

def test_stream_reproducible():
   first = RngStream(42)
   second = RngStream(42)
   assert_allclose(first.spawn().random(5),second.spawn().random(5),rtol=0,atol=0)
   assert first.position==1
   # distinct positions give distinct substreams
   assert not np.array_equal(first.spawn().random(5),RngStream(42).spawn().random(5))
   assert np.array_equal(RngStream(3).generator(7).random(4),RngStream(3,position=7).spawn().random(4))

def test_single_stage_is_one_draw():
   value = sample_waiting_time(2,5,math.inf,2.0,rng=RngStream(9))
   expected = -math.log1p(-RngStream(9).spawn().random())*2.0/3
   assert_allclose(value,expected,rtol=1e-14)

def test_waiting_time_mean():
   n, k, q, tau0 = 5, 1, 10.0, 2.0
   draws = sample_waiting_time(k,n,q,tau0,rng=RngStream(1),size=1000000)
   rates = [(n - k + j*q)/tau0 for j in range(3)]
   mean = sum(1/rate for rate in rates)
   sigma = math.sqrt(sum(1/rate**2 for rate in rates))
   assert abs(draws.mean() - mean)<=4*sigma/math.sqrt(len(draws))

def test_waiting_time_distribution():
   n, k, q, tau0 = 4, 1, 10.0, 1.0
   draws = sample_waiting_time(k,n,q,tau0,rng=RngStream(2),size=100000)
   density = waiting_density(n - k,q,tau0)
   assert kstest(draws,density.cdf).pvalue>0.01

def test_rejection_sampler():
   n_eff, q, tau0 = 3, 10.0, 1.0
   rejected = rejection_sample_waiting_time(n_eff,q,tau0,100000,rng=RngStream(3))
   assert len(rejected)==100000
   direct = sample_waiting_time(0,n_eff,q,tau0,rng=RngStream(4),size=100000)
   assert ks_2samp(rejected,direct).pvalue>0.01

def test_rejection_sampler_single_stage():
   draws = rejection_sample_waiting_time(2,math.inf,1.0,1000,rng=RngStream(5))
   assert len(draws)==1000 and np.all(draws>=0)

def test_waiting_time_validation():
   with pytest.raises(ConfigurationError):
      sample_waiting_time(3,3,10.0,1.0)
   with pytest.raises(ConfigurationError):
      RngStream(-1)

def test_trajectory():
   for seed in range(20):
      sample = sample_trajectory(6,10.0,0.8,1.5,rng=RngStream(seed))
      assert sample.count<=6
      assert np.all(np.diff(sample.times)>0)
      assert np.all(sample.times<=sample.tau)
   assert sample_trajectory(4,10.0,1.0,1.0,rng=RngStream(0)).count==4

def test_trivial_counts():
   empirical = simulate_counts(0,10.0,0.5,1000)
   assert empirical.counts.tolist()==[1000]
   empirical = simulate_counts(5,10.0,1.0,1000)
   assert empirical.counts.tolist()==[0,0,0,0,0,1000]
   assert empirical.shots==1000

def test_reproducible_across_workers(monkeypatch):
   monkeypatch.setattr(stochastic,'chunk_size',1000)
   single = simulate_counts(8,10.0,0.7,10500,rng=11)
   threaded = simulate_counts(8,10.0,0.7,10500,rng=11,workers=4)
   assert np.array_equal(single.counts,threaded.counts)
   assert single.shots==10500
   other = simulate_counts(8,10.0,0.7,10500,rng=12)
   assert not np.array_equal(single.counts,other.counts)

def test_agrees_with_closed_form():
   n, q, p = 10, 10.0, 0.9
   empirical = simulate_counts(n,q,p,1000000,rng=2024)
   closed = count_distribution(q,p,n)
   assert empirical.within(closed,sigmas=4)
   eta = efficiency(q,p,n)
   assert abs(empirical.mean/n - eta)<=4*empirical.mean_stderr/n

@pytest.mark.parametrize('q',[10,100])
@pytest.mark.parametrize('p',[0.6,0.9])
@pytest.mark.parametrize('n',[1,3,10])
def test_acceptance_grid(q,p,n):
   empirical = simulate_counts(n,q,p,1000000,rng=q*100 + n)
   assert empirical.within(count_distribution(q,p,n),sigmas=4)
   assert abs(empirical.mean/n - efficiency(q,p,n))<=4*empirical.mean_stderr/n

def test_binomial_sentinel():
   empirical = simulate_counts(6,math.inf,0.5,200000,rng=8)
   assert empirical.within(count_distribution(math.inf,0.5,6),sigmas=4)

def test_empirical_distribution():
   empirical = EmpiricalDistribution(2,np.array([25,50,25]),q=10.0,p=0.5)
   assert_allclose(empirical.probabilities,[0.25,0.5,0.25])
   assert_allclose(empirical.stderr,np.sqrt([0.25*0.75/100,0.25/100,0.25*0.75/100]))
   assert empirical.mean==1.0
   assert empirical.within([0.25,0.5,0.25],sigmas=0)
   assert not empirical.within([0.5,0.5,0.0],sigmas=4)
   dist = empirical.distribution()
   assert dist.n==2 and dist.q==10.0

def test_as_generator():
   generator = np.random.default_rng(0)
   assert as_generator(generator) is generator
   assert isinstance(as_generator(5),np.random.Generator)
