#!/usr/bin/env python3
"""
Backend Verification Script
Exercises the HTTP API in-process; runs under pytest or directly:

    python test_backend.py
"""

import sys
from colorama import init, Fore, Style
from fastapi.testclient import TestClient

from app.main import app
from conftest import TINY, load_source

# Initialize colorama for colored output
init(autoreset=True)

API_URL = "/api/v1"

client = TestClient(app)


def print_success(message):
    print(f"{Fore.GREEN}✅ {message}{Style.RESET_ALL}")

def print_error(message):
    print(f"{Fore.RED}❌ {message}{Style.RESET_ALL}")

def print_info(message):
    print(f"{Fore.BLUE}ℹ️  {message}{Style.RESET_ALL}")

def banner(title):
    print("\n" + "="*50)
    print(f"{Fore.CYAN}{title}{Style.RESET_ALL}")
    print("="*50)


def test_health_check():
    """Test if backend is up and the corpus loaded"""
    banner("Testing Health Check...")
    response = client.get("/health")
    assert response.status_code == 200
    data = response.json()
    assert data["status"] == "healthy"
    assert data["corpus"] == 10
    assert data["limits"]["exact_lp_dim"] >= 1
    print_success("Backend is running!")
    print_info(f"Corpus: {data['corpus']} contracts, version {data['version']}")


def test_root_endpoint():
    banner("Testing Root Endpoint...")
    response = client.get("/")
    assert response.status_code == 200
    assert response.json()["status"] == "running"
    print_success("Root endpoint working!")


def test_parse_contract():
    banner("Testing Contract Parsing...")
    response = client.post(f"{API_URL}/contracts/parse", json={"source": load_source("rps")})
    assert response.status_code == 200
    data = response.json()
    assert data["name"] == "RPS"
    assert data["functions"] == ["registerBob", "play", "getReward"]
    assert data["maps"] == ["Bids"]
    assert data["pretty"].startswith("contract RPS {")
    print_success(f"Parsed {data['name']} with {len(data['functions'])} functions")


def test_parse_errors():
    banner("Testing Parse Errors...")
    response = client.post(f"{API_URL}/contracts/parse", json={"source": "contract E { }"})
    assert response.status_code == 400
    assert response.json()["detail"]["line"] == 1

    response = client.post(f"{API_URL}/contracts/parse", json={"source": TINY, "overrides": {"y": [0, 1]}})
    assert response.status_code == 400

    response = client.post(f"{API_URL}/contracts/parse", json={"source": ""})
    assert response.status_code == 422
    print_success("Bad contracts are rejected")


def test_validate_contract():
    banner("Testing Validation...")
    response = client.post(f"{API_URL}/contracts/validate", json={"source": load_source("sale")})
    assert response.status_code == 200
    assert response.json() == []

    bad = "contract Bad { numeric x[0,5] = 9; function f[1,2](x : caller) { x = 1; } }"
    response = client.post(f"{API_URL}/contracts/validate", json={"source": bad})
    assert response.status_code == 200
    (diag,) = response.json()
    assert diag["rule"] == "initial-value"
    assert diag["severity"] == "error"
    print_success("Diagnostics reported")


def test_contract_cfg():
    banner("Testing Control Flow Graphs...")
    response = client.post(f"{API_URL}/contracts/cfg", json={"source": load_source("rps"), "function": "play"})
    assert response.status_code == 200
    (graph,) = response.json()
    assert graph["function"] == "play"
    assert "8 9 (played == 1)" in graph["graph"]
    assert graph["unreachable"] == []

    response = client.post(f"{API_URL}/contracts/cfg", json={"source": load_source("rps"), "function": "nope"})
    assert response.status_code == 400
    response = client.post(f"{API_URL}/contracts/cfg", json={"source": TINY, "format": "dot"})
    assert response.status_code == 422
    print_success("CFG export working")


def test_run_analysis():
    banner("Testing Analysis...")
    payload = {"source": TINY, "party": "p", "objective": "x", "parties": 1, "max_iters": 2, "exact": True}
    response = client.post(f"{API_URL}/analysis/run", json=payload)
    assert response.status_code == 200
    report = response.json()
    assert report["contract"] == "Tiny"
    assert report["exact"] == "100"
    assert report["verdict"] in ("converged", "gap-reached", "capped")
    last = report["iterations"][-1]
    print_info(f"Bounds [{last['lower']}, {last['upper']}] after {len(report['iterations'])} iteration(s)")
    print_success("Analysis working")


def test_run_analysis_errors():
    banner("Testing Analysis Errors...")
    base = {"source": TINY, "party": "p", "objective": "x", "parties": 1}
    response = client.post(f"{API_URL}/analysis/run", json={**base, "report_path": "/tmp/r.json"})
    assert response.status_code == 422
    response = client.post(f"{API_URL}/analysis/run", json={**base, "objective": "payoff * 2"})
    assert response.status_code == 400
    response = client.post(f"{API_URL}/analysis/run", json={**base, "target_gap": "-1"})
    assert response.status_code == 422
    response = client.post(f"{API_URL}/analysis/run", json={"party": "p", "objective": "x"})
    assert response.status_code == 422
    print_success("Bad requests are rejected")


def test_corpus_endpoints():
    banner("Testing Corpus...")
    response = client.get(f"{API_URL}/corpus")
    assert response.status_code == 200
    entries = {entry["name"]: entry for entry in response.json()}
    assert entries["rps"]["expected"] == "10/3"
    assert entries["buggy_rps"]["pair"] == "rps"

    response = client.get(f"{API_URL}/corpus/sale/source")
    assert response.status_code == 200
    assert "contract Sale" in response.json()["source"]

    response = client.get(f"{API_URL}/corpus/nope/source")
    assert response.status_code == 404
    print_success(f"Corpus has {len(entries)} contracts")


def test_corpus_run():
    banner("Testing Corpus Run...")
    overrides = {"remaining": [0, 2], "payment": [0, 2], "balance": [0, 4]}
    response = client.post(f"{API_URL}/corpus/buggy_sale/run",
                           json={"overrides": overrides, "max_iters": 2, "exact": True})
    assert response.status_code == 200
    report = response.json()
    assert report["exact"] == "3"
    assert report["config"]["overrides"]["remaining"] == [0, 2]
    print_success("Corpus run working")


def run_all_tests():
    """Run all tests"""
    print(f"\n{Fore.MAGENTA}{'='*50}")
    print(f"🧪 CONTRACT ANALYZER BACKEND VERIFICATION")
    print(f"{'='*50}{Style.RESET_ALL}\n")

    checks = [
        test_health_check, test_root_endpoint, test_parse_contract, test_parse_errors,
        test_validate_contract, test_contract_cfg, test_run_analysis, test_run_analysis_errors,
        test_corpus_endpoints, test_corpus_run,
    ]
    results = {}
    for check in checks:
        name = check.__name__[len("test_"):]
        try:
            check()
            results[name] = True
        except AssertionError as e:
            print_error(f"{name}: {e or 'assertion failed'}")
            results[name] = False

    # Print summary
    print("\n" + "="*50)
    print(f"{Fore.MAGENTA}📊 TEST SUMMARY{Style.RESET_ALL}")
    print("="*50 + "\n")

    total = len(results)
    passed = sum(1 for v in results.values() if v)

    for test, result in results.items():
        status = "✅ PASS" if result else "❌ FAIL"
        color = Fore.GREEN if result else Fore.RED
        print(f"{color}{status}{Style.RESET_ALL} - {test.replace('_', ' ').title()}")

    print("\n" + "="*50)
    print(f"Total: {passed}/{total} tests passed")
    print("="*50 + "\n")

    if passed == total:
        print(f"{Fore.GREEN}🎉 All tests passed! The analyzer API is ready!{Style.RESET_ALL}\n")
        return 0
    else:
        print(f"{Fore.RED}❌ Some tests failed. Please fix the issues above.{Style.RESET_ALL}\n")
        return 1

if __name__ == "__main__":
    try:
        exit_code = run_all_tests()
        sys.exit(exit_code)
    except KeyboardInterrupt:
        print(f"\n{Fore.YELLOW}Test interrupted by user{Style.RESET_ALL}")
        sys.exit(1)
