"""
Tests for the voltube API
GET  /api/v1/runs/: persisted experiment runs
POST /api/v1/constants/: constant chain for a builtin family
POST /api/v1/auth/token/: JWT access for scripted clients

Covers:
- Unauthenticated → 401, non-staff → 403, staff → 200
- JWT bearer tokens reach the run history
- limit validation → 400
- Constants: valid model → 200 with the log-domain chain, invalid body → 400
- Admin changelist renders for superusers
"""
from django.contrib.auth.models import User
from django.test import TestCase
from rest_framework.test import APIClient

from lsv.models import ExperimentRun

RUNS_URL = '/api/v1/runs/'
CONSTANTS_URL = '/api/v1/constants/'
TOKEN_URL = '/api/v1/auth/token/'

HESTON = {
    'family': 'heston',
    'params': {'kappa': 1.0, 'theta': 0.09, 'xi': 0.3, 'rho': -0.5, 'V0': 0.09, 'T': 1.0},
}


def _run(**fields):
    values = dict(
        subcommand='tails', family='heston', config_hash='f' * 64, spec_hash='e' * 64, seed=1,
        n_paths=1000, n_steps=20, scheme='euler_full_truncation', engine_version='1.0.0',
    )
    values.update(fields)
    return ExperimentRun.objects.create(**values)


class PermissionsTest(TestCase):
    """
    Test suite for API permissions.

    Verifies that:
    1. Anonymous requests get 401
    2. Authenticated non-staff users get 403
    3. Staff users get 200
    4. A JWT access token works as a bearer credential
    """

    def setUp(self):
        self.client = APIClient()
        self.staff = User.objects.create_user(username='analyst', password='pass12345', is_staff=True)
        self.user = User.objects.create_user(username='viewer', password='pass12345')
        _run()

    def test_anonymous_401(self):
        self.assertEqual(self.client.get(RUNS_URL).status_code, 401)
        self.assertEqual(self.client.post(CONSTANTS_URL, HESTON, format='json').status_code, 401)

    def test_non_staff_403(self):
        self.client.force_authenticate(user=self.user)
        self.assertEqual(self.client.get(RUNS_URL).status_code, 403)
        self.assertEqual(self.client.post(CONSTANTS_URL, HESTON, format='json').status_code, 403)

    def test_staff_200(self):
        self.client.force_authenticate(user=self.staff)
        r = self.client.get(RUNS_URL)
        self.assertEqual(r.status_code, 200)
        self.assertEqual(r.json()['meta']['total'], 1)

    def test_jwt_bearer(self):
        r = self.client.post(TOKEN_URL, {'username': 'analyst', 'password': 'pass12345'}, format='json')
        self.assertEqual(r.status_code, 200)
        self.client.credentials(HTTP_AUTHORIZATION=f"Bearer {r.json()['access']}")
        self.assertEqual(self.client.get(RUNS_URL).status_code, 200)

    def test_invalid_token_401(self):
        self.client.credentials(HTTP_AUTHORIZATION='Bearer not-a-token')
        self.assertEqual(self.client.get(RUNS_URL).status_code, 401)


class RunHistoryApiTest(TestCase):
    """Tests for GET /api/v1/runs/"""

    def setUp(self):
        self.client = APIClient()
        self.client.force_authenticate(user=User.objects.create_user(username='s', password='p', is_staff=True))
        _run()
        _run(subcommand='tube', summary={'tubes': []})

    def test_filter_by_subcommand(self):
        data = self.client.get(RUNS_URL, {'subcommand': 'tube'}).json()
        self.assertEqual(data['meta']['total'], 1)
        self.assertEqual(data['runs'][0]['subcommand'], 'tube')
        self.assertNotIn('summary', data['runs'][0])

    def test_include_summary(self):
        data = self.client.get(RUNS_URL, {'subcommand': 'tube', 'include_summary': '1'}).json()
        self.assertEqual(data['runs'][0]['summary'], {'tubes': []})

    def test_invalid_limit_400(self):
        r = self.client.get(RUNS_URL, {'limit': 'abc'})
        self.assertEqual(r.status_code, 400)
        self.assertIn('error', r.json())


class ConstantsApiTest(TestCase):
    """
    Test suite for POST /api/v1/constants/

    Verifies that:
    1. A valid heston model returns the constant chain with log_Q and thresholds
    2. Unknown families and out-of-range parameters return 400
    """

    def setUp(self):
        self.client = APIClient()
        self.client.force_authenticate(user=User.objects.create_user(username='s', password='p', is_staff=True))

    def test_valid_model(self):
        r = self.client.post(CONSTANTS_URL, HESTON, format='json')
        self.assertEqual(r.status_code, 200)
        data = r.json()
        self.assertIn('log_Q', data['constants'])
        self.assertIn('y_threshold', data['thresholds'])
        self.assertIn('log_value', data['moment_ceiling'])
        self.assertEqual(data['spec']['family'], 'heston')

    def test_invalid_body_400(self):
        r = self.client.post(CONSTANTS_URL, {'family': 'sabr', 'params': {}}, format='json')
        self.assertEqual(r.status_code, 400)
        bad_rho = {'family': 'heston', 'params': dict(HESTON['params'], rho=2.0)}
        self.assertEqual(self.client.post(CONSTANTS_URL, bad_rho, format='json').status_code, 400)


class ExperimentRunAdminTest(TestCase):
    """Tests for the ExperimentRun admin."""

    def test_changelist_renders(self):
        admin = User.objects.create_superuser(username='root', email='root@example.com', password='pass12345')
        self.client.force_login(admin)
        _run()
        r = self.client.get('/admin/lsv/experimentrun/')
        self.assertEqual(r.status_code, 200)
        self.assertContains(r, 'tails')
