"""
voltube API v1 Views
Read-only access to persisted runs and on-demand constant chains.
"""
from rest_framework import status
from rest_framework.permissions import IsAdminUser, IsAuthenticated
from rest_framework.response import Response
from rest_framework.views import APIView

from lsv.exceptions import VoltubeError
from lsv.services.curves import bound_constants
from lsv.services.experiments import ModelConfigSerializer, constants_summary
from lsv.services.experiments.history import LIMIT_DEFAULT, get_run_history
from lsv.services.experiments.writers import jsonable
from lsv.services.model import build_family


class RunHistoryView(APIView):
    """
    Experiment run history, persisted data only.

    GET /api/v1/runs/

    Query Parameters:
    - subcommand       str  optional
    - family           str  optional
    - config_hash      str  optional (prefix match)
    - include_summary  0/1  default 0
    - limit            int  optional (default 50, max 500)

    Returns:
    - 200: {meta, runs}
    - 400: Invalid parameters
    - 403: Permission denied
    """

    permission_classes = [IsAuthenticated, IsAdminUser]

    def get(self, request):
        params = request.query_params
        try:
            limit = int(params.get('limit', LIMIT_DEFAULT))
        except ValueError:
            return Response({'error': 'limit must be an integer'}, status=status.HTTP_400_BAD_REQUEST)

        result = get_run_history(
            subcommand=params.get('subcommand') or None,
            family=params.get('family') or None,
            config_hash=params.get('config_hash') or None,
            include_summary=params.get('include_summary', '0') == '1',
            limit=limit,
        )
        return Response(result, status=status.HTTP_200_OK)


class ConstantsView(APIView):
    """
    Constant chain for a builtin family.

    POST /api/v1/constants/
    Body: {"family": "heston", "params": {...}, "custom_bounds": {"K": null, "C2": null, "L": null}}

    Returns:
    - 200: constants, thresholds, moment ceiling, wing floors (log domain)
    - 400: Invalid model
    - 403: Permission denied
    - 422: Constants not computable for this model
    """

    permission_classes = [IsAuthenticated, IsAdminUser]

    def post(self, request):
        serializer = ModelConfigSerializer(data=request.data)
        if not serializer.is_valid():
            return Response({'error': serializer.errors}, status=status.HTTP_400_BAD_REQUEST)

        data = serializer.validated_data
        bounds = data.get('custom_bounds') or {}
        try:
            spec = build_family(data['family'], data['params'], K=bounds.get('K'))
            consts = bound_constants(spec, C2=bounds.get('C2'), L=bounds.get('L'))
            payload = constants_summary(spec, consts)
        except VoltubeError as exc:
            return Response({'error': str(exc)}, status=status.HTTP_422_UNPROCESSABLE_ENTITY)

        return Response(jsonable(payload), status=status.HTTP_200_OK)
