#!/usr/bin/env python3
"""
Install required dependencies for the gradient estimation toolkit.
"""

import subprocess
import sys
from pathlib import Path

REQUIREMENTS = Path(__file__).resolve().parent.parent / "requirements.txt"


def read_requirements():
    """Package specifiers from requirements.txt, comments dropped."""
    lines = REQUIREMENTS.read_text().splitlines()
    return [line.split('#')[0].strip() for line in lines if line.split('#')[0].strip()]


def install_package(package):
    """Install a package using pip"""
    try:
        subprocess.check_call([sys.executable, "-m", "pip", "install", package])
        print(f"✅ {package} installed successfully")
        return True
    except subprocess.CalledProcessError:
        print(f"❌ Failed to install {package}")
        return False


def main():
    print("📦 Installing dependencies for the GSPGS toolkit...")

    failed_packages = []

    for package in read_requirements():
        print(f"\n📥 Installing {package}...")
        if not install_package(package):
            failed_packages.append(package)

    print(f"\n{'='*50}")
    if failed_packages:
        print(f"❌ Failed to install: {', '.join(failed_packages)}")
        print(f"Please install them manually using: pip install {' '.join(repr(p) for p in failed_packages)}")
        sys.exit(1)
    else:
        print("🎉 All dependencies installed successfully!")
        print("\n🔧 Next steps:")
        print("1. Optionally set GSPGS_* variables in .env (see docs/SETUP_GUIDE.md)")
        print("2. Run: python run_experiments.py identities --kmax 8")
        print("3. Run: python -m src.test.run_tests smoke")


if __name__ == "__main__":
    main()
